#include "fbmreg/crlb.hpp"

#include "fbmreg/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <string>

namespace fbmreg {

FisherInfo fisher_info(const CorrelationModel& model, const FullParams& params, NoiseVariances noise) {
    const ModelBlocks blocks = model.blocks(params.texture.hurst, params.rst, true);
    const JointCorrelation r = model.assemble(params, blocks, noise);
    const Eigen::LLT<Matrix> llt(r.matrix);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "joint correlation matrix is not positive definite");
    }
    const Matrix w = llt.solve(Matrix::Identity(r.matrix.rows(), r.matrix.cols()));

    // I(i,j) = 1/2 tr(W D_i W D_j) = 1/2 <A_i, A_j^T> with A_i = W D_i.
    std::array<Matrix, kNumParams> a;
    for (int i = 0; i < kNumParams; ++i) {
        const Matrix d = model.assemble_derivative(params, blocks, kAllParams[i]);
        a[i].noalias() = w * d;
    }
    FisherInfo fim;
    for (int i = 0; i < kNumParams; ++i) {
        for (int j = i; j < kNumParams; ++j) {
            const double v = 0.5 * a[i].cwiseProduct(a[j].transpose()).sum();
            fim.matrix(i, j) = v;
            fim.matrix(j, i) = v;
        }
    }
    return fim;
}

FisherInfo fisher_info(const FullParams& params, PairGeometry geometry, NoiseVariances noise) {
    return fisher_info(CorrelationModel(geometry), params, noise);
}

CrlbResult crlb_from_fisher(const FisherInfo& fim) {
    const Matrix8& f = fim.matrix;
    Vector8 scale;
    for (int i = 0; i < kNumParams; ++i) {
        if (!(f(i, i) > 0.0) || !std::isfinite(f(i, i))) {
            throw Error(ErrorCode::SingularFim, "no information on parameter " +
                                                    std::string(param_name(kAllParams[i])));
        }
        scale[i] = 1.0 / std::sqrt(f(i, i));
    }
    // Equilibrate first so that parameter units do not dominate the condition number.
    const Matrix8 eq = scale.asDiagonal() * f * scale.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Matrix8> es(eq);
    const double lmin = es.eigenvalues()[0];
    const double lmax = es.eigenvalues()[kNumParams - 1];
    if (!(lmin > 0.0) || lmax / lmin > kMaxFimCondition) {
        Eigen::Index dominant = 0;
        es.eigenvectors().col(0).cwiseAbs().maxCoeff(&dominant);
        throw Error(ErrorCode::SingularFim, "Fisher information is singular; null direction dominated by " +
                                                std::string(param_name(kAllParams[dominant])));
    }
    const Matrix8 inv_eq = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                           es.eigenvectors().transpose();

    CrlbResult out;
    out.cov = scale.asDiagonal() * inv_eq * scale.asDiagonal();
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    out.sigma_theta = out.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    out.rst_cov = out.cov.bottomRightCorner<kNumRstParams, kNumRstParams>();
    out.sigma_rst = out.sigma_theta.tail<kNumRstParams>();
    out.sigma_rst[2] = rad_to_deg(out.sigma_rst[2]);
    return out;
}

CrlbResult crlb(const FullParams& params, PairGeometry geometry, NoiseVariances noise) {
    return crlb_from_fisher(fisher_info(params, geometry, noise));
}

double chi2_4_upper_tail(double q) noexcept {
    if (q <= 0.0) {
        return 1.0;
    }
    return std::exp(-0.5 * q) * (1.0 + 0.5 * q);
}

double chi2_4_upper_quantile(double tail) {
    if (!(tail > 0.0 && tail < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "tail probability must lie in (0, 1)");
    }
    double lo = 0.0;
    double hi = 1.0;
    while (chi2_4_upper_tail(hi) > tail) {
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (chi2_4_upper_tail(mid) > tail ? lo : hi) = mid;
    }
    // Newton polish on log tail: d/dq log P = -q / (2 (2 + q)).
    double q = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double g = std::log(chi2_4_upper_tail(q)) - std::log(tail);
        q += g * 2.0 * (2.0 + q) / q;
    }
    return q;
}

OutlierVerdict outlier_test(const RstParams& theta_hat, const RstParams& theta_ref, const Matrix4& rst_cov,
                            double tail) {
    const Eigen::LLT<Matrix4> llt(rst_cov);
    if (llt.info() != Eigen::Success || !rst_cov.allFinite()) {
        throw Error(ErrorCode::SingularCovariance, "RST covariance is not positive definite");
    }
    const Vector4 d = theta_hat.as_vector() - theta_ref.as_vector();
    OutlierVerdict v;
    v.q = d.dot(llt.solve(d));
    v.threshold = chi2_4_upper_quantile(tail);
    v.is_outlier = v.q > v.threshold;
    return v;
}

}  // namespace fbmreg
