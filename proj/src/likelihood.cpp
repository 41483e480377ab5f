#include "fbmreg/likelihood.hpp"

#include "fbmreg/crlb.hpp"
#include "fbmreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fbmreg {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

NoiseVariances floored_noise(const FragmentPair& pair, double floor) {
    return {std::max(pair.reference.noise_var(), floor), std::max(pair.tmpl.noise_var(), floor)};
}

struct GlsSolution {
    CentralValues central;
    Vector residual_white;
};

// Solves the 2x2 normal equations of the central values given the Cholesky
// factor of R and returns the whitened residual.
GlsSolution solve_gls(const Eigen::LLT<Matrix>& llt, const Vector& y, int n_ri_count) {
    const Eigen::Index n = y.size();
    Matrix rhs = Matrix::Zero(n, 3);
    rhs.col(0).head(n_ri_count).setOnes();
    rhs.col(1).tail(n - n_ri_count).setOnes();
    rhs.col(2) = y;
    llt.matrixL().solveInPlace(rhs);
    const Matrix ve = rhs.leftCols(2);
    const Eigen::Matrix2d m = ve.transpose() * ve;
    const Eigen::Vector2d b = ve.transpose() * rhs.col(2);
    const double det = m.determinant();
    if (!(std::abs(det) > 1e-14 * m.diagonal().prod()) || !std::isfinite(det)) {
        throw Error(ErrorCode::SingularSystem, "central-value normal equations are singular");
    }
    const Eigen::Vector2d x0 = m.inverse() * b;
    GlsSolution out;
    out.central = {x0[0], x0[1]};
    out.residual_white = rhs.col(2) - ve * x0;
    return out;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

Vector stack_pair(const FragmentPair& pair) {
    const Vector a = pair.reference.stacked();
    const Vector b = pair.tmpl.stacked();
    Vector y(a.size() + b.size());
    y << a, b;
    return y;
}

CentralValues estimate_central_values(const Vector& delta_y, const JointCorrelation& r_sigma) {
    if (delta_y.size() != r_sigma.matrix.rows()) {
        throw Error(ErrorCode::InvalidArgument, "sample length does not match the joint matrix");
    }
    const Eigen::LLT<Matrix> llt(r_sigma.matrix);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "joint correlation matrix is not positive definite");
    }
    return solve_gls(llt, delta_y, r_sigma.ri_count()).central;
}

LikelihoodEval log_likelihood(const FragmentPair& pair, const FullParams& params) {
    LikelihoodFunction f(pair, {pair.reference.noise_var(), pair.tmpl.noise_var()});
    const auto r = f.evaluate(params, false);
    return {r.log_lf, r.central, params};
}

LikelihoodFunction::LikelihoodFunction(const FragmentPair& pair, NoiseVariances noise)
    : model_(PairGeometry{pair.reference.size(), pair.tmpl.size()}), noise_(noise), y_(stack_pair(pair)) {}

LikelihoodFunction::Factorization LikelihoodFunction::factorize(const FullParams& params,
                                                                const ModelBlocks& blocks) const {
    const JointCorrelation r = model_.assemble(params, blocks, noise_);
    Factorization fz;
    fz.theta = params.as_vector();
    fz.llt.compute(r.matrix);
    if (fz.llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "joint correlation matrix is not positive definite");
    }
    const GlsSolution gls = solve_gls(fz.llt, y_, r.ri_count());
    fz.central = gls.central;
    fz.residual_white = gls.residual_white;
    fz.log_lf = -0.5 * (gls.residual_white.squaredNorm() + log_det(fz.llt));
    if (!std::isfinite(fz.log_lf)) {
        throw Error(ErrorCode::NotPositiveDefinite, "log-likelihood is not finite");
    }
    return fz;
}

LikelihoodFunction::Result LikelihoodFunction::evaluate(const FullParams& params, bool with_gradient) {
    params.validate();
    const Vector8 theta = params.as_vector();
    const bool hit = cache_ && cache_->theta == theta;
    Result out;
    if (hit && !with_gradient) {
        out.log_lf = cache_->log_lf;
        out.central = cache_->central;
        return out;
    }
    const ModelBlocks blocks = model_.blocks(params.texture.hurst, params.rst, with_gradient);
    if (!hit) {
        cache_.reset();
        cache_ = factorize(params, blocks);
    }
    out.log_lf = cache_->log_lf;
    out.central = cache_->central;
    if (!with_gradient) {
        return out;
    }
    // d(-log L)/d theta_i = 1/2 <W - a a^T, dR/d theta_i> with W = R^-1 and
    // a = W (Y - E x0); the central values drop out because they are optimal.
    const auto n = y_.size();
    Matrix g = cache_->llt.solve(Matrix::Identity(n, n));
    const Vector a = cache_->llt.matrixU().solve(cache_->residual_white);
    g.noalias() -= a * a.transpose();
    out.gradient = -0.5 * model_.contract_derivatives(params, blocks, g);
    return out;
}

double increment_std(const Fragment& fragment) {
    const Matrix& p = fragment.pixels();
    const Eigen::Index n = p.rows();
    if (n < 2) {
        throw Error(ErrorCode::InvalidArgument, "fragment too small for increments");
    }
    auto population_variance = [](const Eigen::ArrayXd& v) {
        return (v - v.mean()).square().mean();
    };
    const Matrix dv = p.bottomRows(n - 1) - p.topRows(n - 1);
    const Matrix dh = p.rightCols(n - 1) - p.leftCols(n - 1);
    const double var_v = population_variance(Eigen::Map<const Eigen::ArrayXd>(dv.data(), dv.size()));
    const double var_h = population_variance(Eigen::Map<const Eigen::ArrayXd>(dh.data(), dh.size()));
    return std::sqrt(0.5 * (var_v + var_h));
}

double overlap_correlation(const FragmentPair& pair, const RstParams& rst) {
    const Fragment& ref = pair.reference;
    const Fragment& tpl = pair.tmpl;
    const int h = tpl.half();
    std::vector<double> a;
    std::vector<double> b;
    for (int v = -h; v <= h; ++v) {
        for (int u = -h; u <= h; ++u) {
            const Point2 back = rst_inverse_coords({static_cast<double>(u), static_cast<double>(v)}, rst);
            const int t = static_cast<int>(std::lround(back.t));
            const int s = static_cast<int>(std::lround(back.s));
            if (ref.contains(t, s)) {
                a.push_back(ref.at(t, s));
                b.push_back(tpl.at(u, v));
            }
        }
    }
    if (a.size() < 3) {
        return 0.0;
    }
    const auto m = static_cast<Eigen::Index>(a.size());
    const Eigen::ArrayXd x = Eigen::Map<const Eigen::ArrayXd>(a.data(), m);
    const Eigen::ArrayXd y = Eigen::Map<const Eigen::ArrayXd>(b.data(), m);
    const Eigen::ArrayXd xc = x - x.mean();
    const Eigen::ArrayXd yc = y - y.mean();
    const double den = std::sqrt(xc.square().sum() * yc.square().sum());
    if (!(den > 0.0)) {
        return 0.0;
    }
    return (xc * yc).sum() / den;
}

TextureParams initial_texture_guess(const FragmentPair& pair, const RstParams& rst) {
    return {increment_std(pair.reference), increment_std(pair.tmpl), 0.5, overlap_correlation(pair, rst)};
}

std::array<RstParams, kNumStarts> multistart_grid(const RstParams& rst) {
    std::array<RstParams, kNumStarts> out;
    out[0] = rst;
    int k = 1;
    for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
            if (i == 0 && j == 0) {
                continue;
            }
            out[k] = rst;
            out[k].dt += i;
            out[k].ds += j;
            ++k;
        }
    }
    return out;
}

BoxBounds ml_bounds(const MlOptions& options) {
    const double inf = std::numeric_limits<double>::infinity();
    BoxBounds b;
    b.lower = Vector(kNumParams);
    b.upper = Vector(kNumParams);
    b.lower << 0.0, 0.0, 0.0, -1.0, -inf, -inf, -inf, options.dr_min;
    b.upper << inf, inf, 1.0, 1.0, inf, inf, inf, options.dr_max;
    return b;
}

MlEstimate estimate_ml(const FragmentPair& pair, const RstParams& rst_initial, const MlOptions& options) {
    rst_initial.validate();
    if (!(options.dr_min > 0.0 && options.dr_min < options.dr_max)) {
        throw Error(ErrorCode::InvalidArgument, "invalid dr bounds");
    }
    TextureParams tex = options.texture_initial ? *options.texture_initial : initial_texture_guess(pair, rst_initial);
    tex.sigma_ri = std::max(tex.sigma_ri, options.sigma_floor);
    tex.sigma_ti = std::max(tex.sigma_ti, options.sigma_floor);
    tex.hurst = std::clamp(tex.hurst, 0.0, 1.0);
    tex.k_rt = std::clamp(tex.k_rt, -options.k_init_limit, options.k_init_limit);

    LikelihoodFunction lf(pair, floored_noise(pair, options.min_noise_var));
    const BoxBounds bounds = ml_bounds(options);

    Objective objective;
    objective.value = [&](const Vector& x) -> std::optional<double> {
        try {
            return -lf.evaluate(FullParams::from_vector(x), false).log_lf;
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    if (options.gradient == GradientMode::Analytic) {
        objective.gradient = [&](const Vector& x) -> std::optional<Vector> {
            try {
                return Vector(-*lf.evaluate(FullParams::from_vector(x), true).gradient);
            } catch (const Error&) {
                return std::nullopt;
            }
        };
    } else {
        objective.gradient = [&](const Vector& x) {
            return fd_gradient(objective.value, x, bounds, options.fd_rel_step);
        };
    }

    // The expected Hessian of -log L at the starting point seeds every start.
    const auto starts = multistart_grid(rst_initial);
    Matrix hessian0 = Matrix::Identity(kNumParams, kNumParams);
    try {
        const FullParams p0{tex, rst_initial};
        hessian0 = fisher_info(lf.model(), p0, lf.noise()).matrix;
        if (!hessian0.allFinite()) {
            hessian0 = Matrix::Identity(kNumParams, kNumParams);
        }
    } catch (const Error&) {
    }

    MlEstimate best;
    best.starts.reserve(kNumStarts);
    bool have_best = false;
    for (int i = 0; i < kNumStarts; ++i) {
        StartDiagnostics diag;
        diag.index = i;
        diag.rst_initial = starts[i];
        const FullParams x0{tex, starts[i]};
        const SqpResult r = minimize_box_sqp(objective, x0.as_vector(), bounds, hessian0, options.sqp);
        diag.failed = r.failed;
        diag.iterations = r.iterations;
        diag.converged = r.converged;
        diag.status = r.status;
        diag.log_lf = r.failed ? kNan : -r.f;
        if (!r.failed && std::isfinite(r.f)) {
            const double ll = -r.f;
            if (!have_best || ll > best.log_lf_at_opt + options.tie_tolerance) {
                have_best = true;
                best.params_hat = FullParams::from_vector(r.x);
                best.log_lf_at_opt = ll;
                best.start_index = i;
                best.iterations = r.iterations;
                best.converged = r.converged;
            }
        }
        best.starts.push_back(std::move(diag));
    }
    if (!have_best) {
        std::string detail;
        for (const auto& s : best.starts) {
            detail += " [start " + std::to_string(s.index) + ": " + s.status + "]";
        }
        throw Error(ErrorCode::AllStartsFailed, "every start failed:" + detail);
    }
    best.central = lf.evaluate(best.params_hat, false).central;
    return best;
}

}  // namespace fbmreg
