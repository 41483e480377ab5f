#include "fbmreg/fbm_model.hpp"

#include "fbmreg/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace fbmreg {

namespace {

struct RotationTerms {
    double cos_a;
    double sin_a;
    double inv_dr;
};

RotationTerms rotation_terms(const RstParams& rst) noexcept {
    return {std::cos(rst.alpha), std::sin(rst.alpha), 1.0 / rst.dr};
}

// H * x^(H-1), the derivative of x^H w.r.t. x. Every use multiplies it by a
// factor that vanishes together with x, so x = 0 contributes nothing.
double pow_h_slope(double x, double h) noexcept {
    if (x <= 0.0) {
        return 0.0;
    }
    return h * std::pow(x, h - 1.0);
}

// Partial derivatives of a back-projected template point (t', s') w.r.t.
// (dt, ds, alpha, dr), given the template point (u, v) and its image (tp, sp).
struct PointDerivatives {
    std::array<double, kNumRstParams> dt;
    std::array<double, kNumRstParams> ds;
};

PointDerivatives back_projection_derivatives(Point2 tpl, Point2 back, const RstParams& rst,
                                             const RotationTerms& rt) noexcept {
    const double du = tpl.t - rst.dt;
    const double dv = tpl.s - rst.ds;
    PointDerivatives d{};
    d.dt[0] = -rt.inv_dr * rt.cos_a;
    d.ds[0] = -rt.inv_dr * rt.sin_a;
    d.dt[1] = rt.inv_dr * rt.sin_a;
    d.ds[1] = -rt.inv_dr * rt.cos_a;
    d.dt[2] = -rt.inv_dr * (rt.sin_a * du + rt.cos_a * dv);
    d.ds[2] = rt.inv_dr * (rt.cos_a * du - rt.sin_a * dv);
    d.dt[3] = -rt.inv_dr * back.t;
    d.ds[3] = -rt.inv_dr * back.s;
    return d;
}

double squared_norm(double a, double b) noexcept { return a * a + b * b; }

}  // namespace

Point2 rst_forward(Point2 ref, const RstParams& rst) noexcept {
    const double c = std::cos(rst.alpha);
    const double s = std::sin(rst.alpha);
    return {rst.dr * (c * ref.t + s * ref.s) + rst.dt, rst.dr * (-s * ref.t + c * ref.s) + rst.ds};
}

Point2 rst_inverse_coords(Point2 tpl, const RstParams& rst) noexcept {
    const auto rt = rotation_terms(rst);
    const double du = tpl.t - rst.dt;
    const double dv = tpl.s - rst.ds;
    return {rt.inv_dr * (rt.cos_a * du - rt.sin_a * dv), rt.inv_dr * (rt.sin_a * du + rt.cos_a * dv)};
}

double pow_h(double x, double h) noexcept {
    if (x <= 0.0) {
        return 0.0;
    }
    return std::pow(x, h);
}

double pow_h_log(double x, double h) noexcept {
    if (x <= 0.0) {
        return 0.0;
    }
    return std::pow(x, h) * std::log(x);
}

PixelIndexMap::PixelIndexMap(int n) : n_(n), half_((n - 1) / 2) {
    if (n <= 0 || n % 2 == 0) {
        throw Error(ErrorCode::InvalidArgument, "pixel map size must be odd and positive");
    }
    points_.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            points_.push_back({static_cast<double>(i - half_), static_cast<double>(j - half_)});
        }
    }
}

double corr_ri(int k1, int k2, double sigma_x, double hurst, const PixelIndexMap& map) {
    const Point2 a = map[k1];
    const Point2 b = map[k2];
    return 0.5 * sigma_x * sigma_x *
           (pow_h(squared_norm(a.t, a.s), hurst) + pow_h(squared_norm(b.t, b.s), hurst) -
            pow_h(squared_norm(a.t - b.t, a.s - b.s), hurst));
}

double corr_hrt(int k, int l, double hurst, const RstParams& rst, const PixelIndexMap& ri_map,
                const PixelIndexMap& ti_map) {
    const Point2 pk = ri_map[k];
    const Point2 pl = rst_inverse_coords(ti_map[l], rst);
    const Point2 p0 = rst_inverse_coords({0.0, 0.0}, rst);
    const double bracket = pow_h(squared_norm(pk.t - p0.t, pk.s - p0.s), hurst) +
                           pow_h(squared_norm(pl.t, pl.s), hurst) - pow_h(squared_norm(p0.t, p0.s), hurst) -
                           pow_h(squared_norm(pk.t - pl.t, pk.s - pl.s), hurst);
    return 0.5 * std::pow(rst.dr, hurst) * bracket;
}

CorrelationModel::CorrelationModel(PairGeometry geometry)
    : geometry_((geometry.validate(), geometry)), ri_map_(geometry.n_ri), ti_map_(geometry.n_ti) {}

void CorrelationModel::fill_auto_block(const PixelIndexMap& map, double hurst, Matrix& unit,
                                       Matrix* d_unit_h) const {
    const int n = map.size();
    const int count = map.count();

    // Distances only enter through the pixel radius and the integer lag, so
    // both are tabulated once per H.
    Matrix lag(n, n);
    Matrix lag_d(n, n);
    for (int b = 0; b < n; ++b) {
        for (int a = 0; a < n; ++a) {
            const double x = static_cast<double>(a * a + b * b);
            lag(a, b) = pow_h(x, hurst);
            lag_d(a, b) = pow_h_log(x, hurst);
        }
    }
    Vector radial(count);
    Vector radial_d(count);
    for (int k = 0; k < count; ++k) {
        const double x = squared_norm(map[k].t, map[k].s);
        radial[k] = pow_h(x, hurst);
        radial_d[k] = pow_h_log(x, hurst);
    }

    unit.resize(count, count);
    if (d_unit_h != nullptr) {
        d_unit_h->resize(count, count);
    }
    for (int j2 = 0; j2 < n; ++j2) {
        for (int i2 = 0; i2 < n; ++i2) {
            const int k2 = i2 + j2 * n;
            for (int j1 = 0; j1 < n; ++j1) {
                const int dj = std::abs(j1 - j2);
                const int base = j1 * n;
                for (int i1 = 0; i1 < n; ++i1) {
                    const int di = std::abs(i1 - i2);
                    unit(base + i1, k2) = 0.5 * (radial[base + i1] + radial[k2] - lag(di, dj));
                }
                if (d_unit_h != nullptr) {
                    for (int i1 = 0; i1 < n; ++i1) {
                        const int di = std::abs(i1 - i2);
                        (*d_unit_h)(base + i1, k2) = 0.5 * (radial_d[base + i1] + radial_d[k2] - lag_d(di, dj));
                    }
                }
            }
        }
    }
}

ModelBlocks CorrelationModel::blocks(double hurst, const RstParams& rst, bool with_derivatives) const {
    using Array = Eigen::ArrayXXd;
    using Col = Eigen::ArrayXd;
    using Row = Eigen::Array<double, 1, Eigen::Dynamic>;

    ModelBlocks out;
    out.hurst = hurst;
    out.rst = rst;
    out.has_derivatives = with_derivatives;

    fill_auto_block(ri_map_, hurst, out.unit_ri, with_derivatives ? &out.d_unit_ri_h : nullptr);
    fill_auto_block(ti_map_, hurst, out.unit_ti, with_derivatives ? &out.d_unit_ti_h : nullptr);

    const int nr = ri_map_.count();
    const int nt = ti_map_.count();
    const auto rt = rotation_terms(rst);
    const double dr_h = std::pow(rst.dr, hurst);
    const double half_dr_h = 0.5 * dr_h;

    const Point2 p0 = rst_inverse_coords({0.0, 0.0}, rst);
    const double c0 = squared_norm(p0.t, p0.s);
    const double c_term = pow_h(c0, hurst);

    Col tk(nr);
    Col sk(nr);
    Col a_term(nr);
    for (int k = 0; k < nr; ++k) {
        tk[k] = ri_map_[k].t;
        sk[k] = ri_map_[k].s;
        a_term[k] = pow_h(squared_norm(tk[k] - p0.t, sk[k] - p0.s), hurst);
    }
    std::vector<Point2> back(static_cast<std::size_t>(nt));
    Row tl(nt);
    Row sl(nt);
    Row b_term(nt);
    for (int l = 0; l < nt; ++l) {
        back[l] = rst_inverse_coords(ti_map_[l], rst);
        tl[l] = back[l].t;
        sl[l] = back[l].s;
        b_term[l] = pow_h(squared_norm(tl[l], sl[l]), hurst);
    }

    // Pairwise squared distances between RI pixels and back-projected TI
    // pixels; the power is taken through vectorized log/exp with 0^H = 0.
    const Array et = tk.replicate(1, nt) - tl.replicate(nr, 1);
    const Array es = sk.replicate(1, nt) - sl.replicate(nr, 1);
    const Array d2 = et.square() + es.square();
    const Array log_d = d2.max(std::numeric_limits<double>::min()).log();
    Array d_term = (hurst * log_d).exp();
    d_term = (d2 > 0.0).select(d_term, 0.0);
    const Array bracket = a_term.replicate(1, nt) + (b_term - c_term).replicate(nr, 1) - d_term;
    out.unit_hrt = half_dr_h * bracket.matrix();
    // The RI origin row vanishes identically; pin it against rounding.
    const int origin = ri_map_.origin_index();
    out.unit_hrt.row(origin).setZero();
    if (!with_derivatives) {
        return out;
    }

    // d(x^H)/dp = H x^(H-1) dx/dp for each of the four squared distances,
    // plus the dr^H prefactor for dr and H.
    const PointDerivatives d0 = back_projection_derivatives({0.0, 0.0}, p0, rst, rt);
    const double c_slope = pow_h_slope(c0, hurst);
    Col a_log(nr);
    Array da(nr, kNumRstParams);
    for (int k = 0; k < nr; ++k) {
        const double x = squared_norm(tk[k] - p0.t, sk[k] - p0.s);
        const double slope = pow_h_slope(x, hurst);
        a_log[k] = pow_h_log(x, hurst);
        for (int p = 0; p < kNumRstParams; ++p) {
            da(k, p) = -2.0 * slope * ((tk[k] - p0.t) * d0.dt[p] + (sk[k] - p0.s) * d0.ds[p]);
        }
    }
    Row b_log(nt);
    Array db(kNumRstParams, nt);
    Array dtl(kNumRstParams, nt);
    Array dsl(kNumRstParams, nt);
    for (int l = 0; l < nt; ++l) {
        const PointDerivatives dl = back_projection_derivatives(ti_map_[l], back[l], rst, rt);
        const double x = squared_norm(tl[l], sl[l]);
        const double slope = pow_h_slope(x, hurst);
        b_log[l] = pow_h_log(x, hurst);
        for (int p = 0; p < kNumRstParams; ++p) {
            dtl(p, l) = dl.dt[p];
            dsl(p, l) = dl.ds[p];
            db(p, l) = 2.0 * slope * (tl[l] * dl.dt[p] + sl[l] * dl.ds[p]);
        }
    }
    const double c_log = pow_h_log(c0, hurst);
    const double log_dr = std::log(rst.dr);

    Array d_slope = hurst * d_term / d2.max(std::numeric_limits<double>::min());
    d_slope = (d2 > 0.0).select(d_slope, 0.0);
    out.d_hrt_h = (half_dr_h * (log_dr * bracket + a_log.replicate(1, nt) + (b_log - c_log).replicate(nr, 1) -
                                d_term * log_d))
                      .matrix();
    for (int p = 0; p < kNumRstParams; ++p) {
        const double dc = c_slope * 2.0 * (p0.t * d0.dt[p] + p0.s * d0.ds[p]);
        // dD/dp = -2 H d^(H-1) (et dt'/dp + es ds'/dp)
        const Array dd = -2.0 * d_slope * (et * dtl.row(p).replicate(nr, 1) + es * dsl.row(p).replicate(nr, 1));
        Array dp = half_dr_h * (da.col(p).replicate(1, nt) + (db.row(p) - dc).replicate(nr, 1) - dd);
        if (p == index_of(ParamIndex::Dr) - kFirstRstParam) {
            dp += (0.5 * hurst * dr_h / rst.dr) * bracket;
        }
        out.d_hrt_rst[p] = dp.matrix();
        out.d_hrt_rst[p].row(origin).setZero();
    }
    out.d_hrt_h.row(origin).setZero();
    return out;
}

JointCorrelation CorrelationModel::assemble(const FullParams& params, const ModelBlocks& blocks,
                                            NoiseVariances noise) const {
    params.validate();
    if (noise.ri < 0.0 || noise.ti < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "noise variances must be non-negative");
    }
    if (noise.ri == 0.0 && noise.ti == 0.0 && std::abs(params.texture.k_rt) == 1.0) {
        throw Error(ErrorCode::DegenerateModel, "noise-free fragments with |k_rt| = 1 give a singular matrix");
    }
    const int nr = ri_map_.count();
    const int nt = ti_map_.count();
    const auto& tx = params.texture;

    JointCorrelation out;
    out.n_ri = geometry_.n_ri;
    out.n_ti = geometry_.n_ti;
    out.matrix.resize(nr + nt, nr + nt);
    out.matrix.topLeftCorner(nr, nr) = (tx.sigma_ri * tx.sigma_ri) * blocks.unit_ri;
    out.matrix.topLeftCorner(nr, nr).diagonal().array() += noise.ri;
    out.matrix.bottomRightCorner(nt, nt) = (tx.sigma_ti * tx.sigma_ti) * blocks.unit_ti;
    out.matrix.bottomRightCorner(nt, nt).diagonal().array() += noise.ti;
    out.matrix.topRightCorner(nr, nt) = (tx.k_rt * tx.sigma_ri * tx.sigma_ti) * blocks.unit_hrt;
    out.matrix.bottomLeftCorner(nt, nr) = out.matrix.topRightCorner(nr, nt).transpose();
    return out;
}

Matrix CorrelationModel::assemble_derivative(const FullParams& params, const ModelBlocks& blocks,
                                             ParamIndex which) const {
    const int nr = ri_map_.count();
    const int nt = ti_map_.count();
    const auto& tx = params.texture;
    if (which != ParamIndex::SigmaRi && which != ParamIndex::SigmaTi && which != ParamIndex::KRt &&
        !blocks.has_derivatives) {
        throw Error(ErrorCode::InvalidArgument, "model blocks were built without derivatives");
    }

    Matrix d = Matrix::Zero(nr + nt, nr + nt);
    auto cross = d.topRightCorner(nr, nt);
    switch (which) {
        case ParamIndex::SigmaRi:
            d.topLeftCorner(nr, nr) = (2.0 * tx.sigma_ri) * blocks.unit_ri;
            cross = (tx.k_rt * tx.sigma_ti) * blocks.unit_hrt;
            break;
        case ParamIndex::SigmaTi:
            d.bottomRightCorner(nt, nt) = (2.0 * tx.sigma_ti) * blocks.unit_ti;
            cross = (tx.k_rt * tx.sigma_ri) * blocks.unit_hrt;
            break;
        case ParamIndex::Hurst:
            d.topLeftCorner(nr, nr) = (tx.sigma_ri * tx.sigma_ri) * blocks.d_unit_ri_h;
            d.bottomRightCorner(nt, nt) = (tx.sigma_ti * tx.sigma_ti) * blocks.d_unit_ti_h;
            cross = (tx.k_rt * tx.sigma_ri * tx.sigma_ti) * blocks.d_hrt_h;
            break;
        case ParamIndex::KRt:
            cross = (tx.sigma_ri * tx.sigma_ti) * blocks.unit_hrt;
            break;
        default:
            cross = (tx.k_rt * tx.sigma_ri * tx.sigma_ti) * blocks.d_hrt_rst[index_of(which) - kFirstRstParam];
            break;
    }
    d.bottomLeftCorner(nt, nr) = d.topRightCorner(nr, nt).transpose();
    return d;
}

Vector8 CorrelationModel::contract_derivatives(const FullParams& params, const ModelBlocks& blocks,
                                               const Matrix& weights) const {
    if (!blocks.has_derivatives) {
        throw Error(ErrorCode::InvalidArgument, "model blocks were built without derivatives");
    }
    const int nr = ri_map_.count();
    const int nt = ti_map_.count();
    const auto& tx = params.texture;
    const auto w_ri = weights.topLeftCorner(nr, nr);
    const auto w_ti = weights.bottomRightCorner(nt, nt);
    const auto w_x = weights.topRightCorner(nr, nt);

    const double ri_u = w_ri.cwiseProduct(blocks.unit_ri).sum();
    const double ti_u = w_ti.cwiseProduct(blocks.unit_ti).sum();
    const double x_u = w_x.cwiseProduct(blocks.unit_hrt).sum();
    const double kss = tx.k_rt * tx.sigma_ri * tx.sigma_ti;

    Vector8 out;
    out[0] = 2.0 * tx.sigma_ri * ri_u + 2.0 * tx.k_rt * tx.sigma_ti * x_u;
    out[1] = 2.0 * tx.sigma_ti * ti_u + 2.0 * tx.k_rt * tx.sigma_ri * x_u;
    out[2] = tx.sigma_ri * tx.sigma_ri * w_ri.cwiseProduct(blocks.d_unit_ri_h).sum() +
             tx.sigma_ti * tx.sigma_ti * w_ti.cwiseProduct(blocks.d_unit_ti_h).sum() +
             2.0 * kss * w_x.cwiseProduct(blocks.d_hrt_h).sum();
    out[3] = 2.0 * tx.sigma_ri * tx.sigma_ti * x_u;
    for (int p = 0; p < kNumRstParams; ++p) {
        out[kFirstRstParam + p] = 2.0 * kss * w_x.cwiseProduct(blocks.d_hrt_rst[p]).sum();
    }
    return out;
}

JointCorrelation CorrelationModel::build(const FullParams& params, NoiseVariances noise) const {
    params.validate();
    return assemble(params, blocks(params.texture.hurst, params.rst, false), noise);
}

Matrix CorrelationModel::derivative(const FullParams& params, ParamIndex which) const {
    params.validate();
    return assemble_derivative(params, blocks(params.texture.hurst, params.rst, true), which);
}

JointCorrelation build_joint_correlation(const FullParams& params, PairGeometry geometry, NoiseVariances noise) {
    return CorrelationModel(geometry).build(params, noise);
}

Matrix d_joint_correlation(const FullParams& params, ParamIndex which, PairGeometry geometry) {
    return CorrelationModel(geometry).derivative(params, which);
}

}  // namespace fbmreg
