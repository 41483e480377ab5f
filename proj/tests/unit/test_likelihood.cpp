#include "fbmreg/errors.hpp"
#include "fbmreg/fbm_model.hpp"
#include "fbmreg/likelihood.hpp"
#include "fbmreg/simulate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace fbmreg;

namespace {

FragmentPair random_pair(int n_ri, int n_ti, std::uint64_t seed, double noise = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 3.0);
    Matrix a(n_ri, n_ri), b(n_ti, n_ti);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    for (int i = 0; i < b.size(); ++i) b.data()[i] = nd(rng);
    return {Fragment(a, noise), Fragment(b, noise)};
}

// Log-LF written with an explicit inverse: -0.5 (log det R + r' R^-1 r),
// r = Y - E x0 with x0 the supplied central values.
double dense_log_lf(const FragmentPair& pair, const FullParams& p, double x_ri0, double x_ti0) {
    const JointCorrelation r = build_joint_correlation(
        p, {pair.reference.size(), pair.tmpl.size()}, {pair.reference.noise_var(), pair.tmpl.noise_var()});
    const Matrix inv = r.matrix.inverse();
    Vector y = stack_pair(pair);
    y.head(r.ri_count()).array() -= x_ri0;
    y.tail(r.ti_count()).array() -= x_ti0;
    const double logdet = std::log(r.matrix.determinant());
    return -0.5 * (logdet + y.dot(inv * y));
}

const FullParams kTp1Like{{5, 5, 0.65, 0.95}, {0.25, 0.25, deg_to_rad(17.0), 1.025}};

}  // namespace

TEST(CentralValues, IdentityCovarianceGivesMeans) {
    const FragmentPair pair = random_pair(5, 3, 1);
    JointCorrelation r;
    r.n_ri = 5;
    r.n_ti = 3;
    r.matrix = 2.5 * Matrix::Identity(34, 34);
    const CentralValues c = estimate_central_values(stack_pair(pair), r);
    EXPECT_NEAR(c.x_ri0, pair.reference.pixels().mean(), 1e-12);
    EXPECT_NEAR(c.x_ti0, pair.tmpl.pixels().mean(), 1e-12);
}

TEST(CentralValues, CenteredSampleGivesZero) {
    const JointCorrelation r = build_joint_correlation(kTp1Like, {3, 3}, {1, 1});
    const Matrix w = r.matrix.inverse();
    Vector y = stack_pair(random_pair(3, 3, 2));
    // Project y onto the W-orthogonal complement of the two indicator vectors.
    Matrix e = Matrix::Zero(18, 2);
    e.col(0).head(9).setOnes();
    e.col(1).tail(9).setOnes();
    y -= e * (e.transpose() * w * e).ldlt().solve(e.transpose() * w * y);
    const CentralValues c = estimate_central_values(y, r);
    EXPECT_NEAR(c.x_ri0, 0.0, 1e-10);
    EXPECT_NEAR(c.x_ti0, 0.0, 1e-10);
}

TEST(CentralValues, MatchesGridSearch) {
    const FragmentPair pair = random_pair(3, 3, 3);
    const CentralValues c = log_likelihood(pair, kTp1Like).central;
    // Coarse-to-fine grid maximization of the dense log-LF.
    double best_a = 0.0, best_b = 0.0, span = 20.0;
    for (int level = 0; level < 8; ++level) {
        double best = -1e300, ba = best_a, bb = best_b;
        for (int i = -20; i <= 20; ++i) {
            for (int j = -20; j <= 20; ++j) {
                const double a = best_a + span * i / 20.0, b = best_b + span * j / 20.0;
                const double v = dense_log_lf(pair, kTp1Like, a, b);
                if (v > best) {
                    best = v;
                    ba = a;
                    bb = b;
                }
            }
        }
        best_a = ba;
        best_b = bb;
        span /= 8.0;
    }
    EXPECT_NEAR(c.x_ri0, best_a, 1e-4);
    EXPECT_NEAR(c.x_ti0, best_b, 1e-4);
}

TEST(LogLikelihood, MatchesExplicitInverse) {
    const FragmentPair pair = random_pair(3, 3, 4);
    const LikelihoodEval ev = log_likelihood(pair, kTp1Like);
    EXPECT_NEAR(ev.log_lf, dense_log_lf(pair, kTp1Like, ev.central.x_ri0, ev.central.x_ti0), 1e-8);
}

TEST(LogLikelihood, ZeroCorrelationDecomposes) {
    const FragmentPair pair = random_pair(5, 3, 5);
    FullParams p = kTp1Like;
    p.texture.k_rt = 0.0;
    const double joint = log_likelihood(pair, p).log_lf;
    auto single = [&](const Fragment& f, double sigma) {
        const PairGeometry g{f.size(), 1};
        FullParams q{{sigma, 1.0, p.texture.hurst, 0.0}, RstParams{}};
        const JointCorrelation r = build_joint_correlation(q, g, {f.noise_var(), 1.0});
        const Matrix m = r.ri_block();
        const Vector y = f.stacked();
        const Matrix w = m.inverse();
        const Vector e = Vector::Ones(y.size());
        const double x0 = e.dot(w * y) / e.dot(w * e);
        const Vector res = y - x0 * e;
        return -0.5 * (std::log(m.determinant()) + res.dot(w * res));
    };
    EXPECT_NEAR(joint, single(pair.reference, 5.0) + single(pair.tmpl, 5.0), 1e-8);
}

TEST(LogLikelihood, ZeroCorrelationFlatInRst) {
    const FragmentPair pair = random_pair(7, 5, 6);
    FullParams p = kTp1Like;
    p.texture.k_rt = 0.0;
    const double base = log_likelihood(pair, p).log_lf;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 10; ++i) {
        p.rst = {2 * u(rng), 2 * u(rng), u(rng), 1.0 + 0.3 * u(rng)};
        EXPECT_NEAR(log_likelihood(pair, p).log_lf, base, 1e-9);
    }
}

TEST(LogLikelihood, InvariantToIntensityOffsets) {
    const PairGeometry g{9, 5};
    const FragmentPair a = simulate_pair(kTp1Like, g, {1.0, 1.0}, 21);
    const FragmentPair b = simulate_pair(kTp1Like, g, {1.0, 1.0}, 21, 40.0, -7.5);
    const LikelihoodEval la = log_likelihood(a, kTp1Like);
    const LikelihoodEval lb = log_likelihood(b, kTp1Like);
    EXPECT_NEAR(la.log_lf, lb.log_lf, 1e-8 * std::abs(la.log_lf));
    EXPECT_NEAR(lb.central.x_ri0 - la.central.x_ri0, 40.0, 1e-8);
    EXPECT_NEAR(lb.central.x_ti0 - la.central.x_ti0, -7.5, 1e-8);
}

TEST(LikelihoodFunction, GradientMatchesFiniteDifferences) {
    const TestPoint tp = test_point(1);
    const FragmentPair pair = simulate_pair(tp.params, {9, 5}, tp.noise(), 11);
    LikelihoodFunction lf(pair, tp.noise());
    const Vector8 theta = tp.params.as_vector();
    const auto r = lf.evaluate(tp.params, true);
    ASSERT_TRUE(r.gradient.has_value());
    for (int i = 0; i < kNumParams; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
        Vector8 hi = theta, lo = theta;
        hi[i] += h;
        lo[i] -= h;
        const double fd = (lf.evaluate(FullParams::from_vector(hi), false).log_lf -
                           lf.evaluate(FullParams::from_vector(lo), false).log_lf) /
                          (2 * h);
        EXPECT_NEAR((*r.gradient)[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << i;
    }
}

TEST(LikelihoodFunction, AgreesWithFreeFunction) {
    const FragmentPair pair = random_pair(5, 3, 8);
    LikelihoodFunction lf(pair, {1, 1});
    EXPECT_NEAR(lf.evaluate(kTp1Like, false).log_lf, log_likelihood(pair, kTp1Like).log_lf, 1e-10);
}

TEST(InitialGuess, ConstantFragmentHasZeroIncrementStd) {
    EXPECT_EQ(increment_std(Fragment(Matrix::Constant(5, 5, 3.0), 1.0)), 0.0);
}

TEST(InitialGuess, CheckerboardIncrementStdIsTwo) {
    Matrix m(7, 7);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) m(i, j) = ((i + j) % 2 == 0) ? 1.0 : -1.0;
    EXPECT_DOUBLE_EQ(increment_std(Fragment(m, 0.0)), 2.0);
}

TEST(InitialGuess, SimulatedSigmaInRange) {
    const TestPoint tp = test_point(1);
    const PairSimulator sim(tp.params, tp.geometry, tp.noise());
    int inside = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const FragmentPair pair = sim.draw(1000 + trial);
        const TextureParams g = initial_texture_guess(pair, tp.params.rst);
        inside += (g.sigma_ri >= 3 && g.sigma_ri <= 7) && (g.sigma_ti >= 3 && g.sigma_ti <= 7);
        EXPECT_EQ(g.hurst, 0.5);
        EXPECT_LE(std::abs(g.k_rt), 1.0);
    }
    EXPECT_GE(inside, 190);
}

TEST(Multistart, GridOrder) {
    const RstParams r{1.0, -2.0, 0.3, 1.1};
    const auto g = multistart_grid(r);
    EXPECT_EQ(g[0].dt, 1.0);
    EXPECT_EQ(g[0].ds, -2.0);
    for (const auto& s : g) {
        EXPECT_EQ(s.alpha, 0.3);
        EXPECT_EQ(s.dr, 1.1);
        EXPECT_LE(std::abs(s.dt - 1.0), 1.0);
        EXPECT_LE(std::abs(s.ds + 2.0), 1.0);
    }
}

TEST(EstimateMl, NoiselessSelfRegistration) {
    const TestPoint tp = test_point(1);
    FullParams p = tp.params;
    p.rst = RstParams{};
    const FragmentPair sim = simulate_pair(p, {13, 7}, {1e-4, 1e-4}, 21);
    const Fragment ref(sim.reference.pixels(), 0.0);
    const FragmentPair pair{ref, ref.center_crop(7)};
    const MlEstimate est = estimate_ml(pair, RstParams{});
    EXPECT_NEAR(est.params_hat.rst.dt, 0.0, 1e-3);
    EXPECT_NEAR(est.params_hat.rst.ds, 0.0, 1e-3);
    EXPECT_NEAR(est.params_hat.rst.alpha, 0.0, 1e-3);
    EXPECT_NEAR(est.params_hat.rst.dr, 1.0, 1e-3);
}

TEST(EstimateMl, BoxAndMonotoneStarts) {
    const TestPoint tp = test_point(1);
    const FragmentPair pair = simulate_pair(tp.params, {11, 7}, tp.noise(), 5);
    MlOptions opt;
    const RstParams rst0{0, 0, tp.params.rst.alpha, tp.params.rst.dr};
    const MlEstimate est = estimate_ml(pair, rst0, opt);
    const BoxBounds box = ml_bounds(opt);
    EXPECT_TRUE(box.contains(est.params_hat.as_vector()));
    ASSERT_EQ(static_cast<int>(est.starts.size()), kNumStarts);
    for (const auto& s : est.starts) {
        if (!s.failed) {
            EXPECT_LE(s.log_lf, est.log_lf_at_opt + 1e-9);
        }
    }
    EXPECT_EQ(est.log_lf_at_opt, est.starts[static_cast<std::size_t>(est.start_index)].log_lf);
    // Estimate is at least as likely as the winning start's initial point.
    FullParams init;
    init.rst = est.starts[static_cast<std::size_t>(est.start_index)].rst_initial;
    init.texture = initial_texture_guess(pair, rst0);
    init.texture.k_rt = std::clamp(init.texture.k_rt, -opt.k_init_limit, opt.k_init_limit);
    EXPECT_GE(est.log_lf_at_opt, log_likelihood(pair, init).log_lf - 1e-9);
}

TEST(EstimateMl, FiniteDifferenceModeAgrees) {
    const TestPoint tp = test_point(1);
    const FragmentPair pair = simulate_pair(tp.params, {9, 5}, tp.noise(), 9);
    const RstParams init{0, 0, tp.params.rst.alpha, tp.params.rst.dr};
    MlOptions fd;
    fd.gradient = GradientMode::FiniteDifference;
    const MlEstimate a = estimate_ml(pair, init);
    const MlEstimate b = estimate_ml(pair, init, fd);
    EXPECT_NEAR(a.log_lf_at_opt, b.log_lf_at_opt, 1e-3);
}
