#include "fbmreg/simulate.hpp"

#include "fbmreg/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace fbmreg {

namespace {

struct TestPointRow {
    double sigma_ti;
    double hurst;
    double k_rt;
    int n_ti;
    double dt;
    double ds;
    double alpha_deg;
    double dr;
    const char* description;
};

constexpr std::array<TestPointRow, kNumTestPoints> kCatalogue{{
    {5.0, 0.65, 0.95, 15, 0.25, 0.25, 17.0, 1.025, "Basic test point"},
    {5.0, 0.65, 0.50, 15, 0.25, 0.25, 17.0, 1.025, "Weak correlation"},
    {5.0, 0.65, 0.95, 9, 0.25, 0.25, 17.0, 1.025, "Small template size"},
    {1.0, 0.65, 0.95, 15, 0.25, 0.25, 17.0, 1.025, "Low template SNR"},
    {5.0, 0.35, 0.95, 15, 0.25, 0.25, 17.0, 1.025, "Rough texture"},
    {5.0, 0.65, 0.95, 15, 0.5, 0.5, 0.0, 1.0, "Pure diagonal translation"},
    {5.0, 0.65, 0.95, 15, 0.5, 0.0, 0.0, 1.0, "Pure vertical translation"},
    {5.0, 0.65, 0.95, 15, 0.0, 0.0, 5.0, 1.0, "Pure rotation"},
    {5.0, 0.65, 0.95, 15, 0.0, 0.0, 0.0, 0.8, "Pure scaling"},
    {5.0, 0.65, 0.95, 15, 0.0, 0.0, 0.0, 1.0, "Zero geometrical transformation"},
}};

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

TestPoint test_point(int id) {
    if (id < 1 || id > kNumTestPoints) {
        throw Error(ErrorCode::UnknownTestPoint,
                    "test point " + std::to_string(id) + " is not in the catalogue (valid ids: 1.." +
                        std::to_string(kNumTestPoints) + ")");
    }
    const TestPointRow& row = kCatalogue[static_cast<std::size_t>(id - 1)];
    TestPoint tp;
    tp.id = id;
    tp.params.texture = {5.0, row.sigma_ti, row.hurst, row.k_rt};
    tp.params.rst = {row.dt, row.ds, deg_to_rad(row.alpha_deg), row.dr};
    tp.geometry = {row.n_ti + 8, row.n_ti};
    tp.description = row.description;
    return tp;
}

double noise_variance_for_fragment(const NoiseModel& model, double mean_intensity) {
    if (!(model.sigma_si >= 0.0) || !(model.sigma_sd >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "noise model coefficients must be non-negative");
    }
    if (!(mean_intensity >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "mean intensity must be non-negative");
    }
    return model.sigma_si * model.sigma_si + mean_intensity * model.sigma_sd * model.sigma_sd;
}

std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

PairSimulator::PairSimulator(const FullParams& params, PairGeometry geometry, NoiseVariances noise)
    : geometry_(geometry), noise_(noise) {
    const JointCorrelation r = build_joint_correlation(params, geometry, noise);
    const Eigen::LLT<Matrix> llt(r.matrix);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "joint correlation matrix is not positive definite");
    }
    factor_ = llt.matrixL();
}

Vector PairSimulator::draw_stacked(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(factor_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = normal(rng);
    }
    return factor_.triangularView<Eigen::Lower>() * z;
}

FragmentPair PairSimulator::split(const Vector& stacked, double offset_ri, double offset_ti) const {
    const int nr = geometry_.n_ri;
    const int nt = geometry_.n_ti;
    Matrix ri = Eigen::Map<const Matrix>(stacked.data(), nr, nr).array() + offset_ri;
    Matrix ti = Eigen::Map<const Matrix>(stacked.data() + geometry_.ri_count(), nt, nt).array() + offset_ti;
    return {Fragment(std::move(ri), noise_.ri), Fragment(std::move(ti), noise_.ti)};
}

FragmentPair PairSimulator::draw(std::uint64_t seed, double offset_ri, double offset_ti) const {
    auto rng = make_rng(seed);
    return split(draw_stacked(rng), offset_ri, offset_ti);
}

FragmentPair simulate_pair(const FullParams& params, PairGeometry geometry, NoiseVariances noise,
                           std::uint64_t seed, double offset_ri, double offset_ti) {
    return PairSimulator(params, geometry, noise).draw(seed, offset_ri, offset_ti);
}

}  // namespace fbmreg
