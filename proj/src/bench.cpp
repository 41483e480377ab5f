#include "fbmreg/bench.hpp"

#include "fbmreg/crlb.hpp"
#include "fbmreg/errors.hpp"
#include "fbmreg/stats.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

namespace fbmreg {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct PreparedTarget {
    const CampaignTarget* target;
    PairSimulator simulator;
    RstParams initial;
    std::optional<CrlbResult> bound;
};

TrialRecord run_estimator(const PreparedTarget& pt, EstimatorKind kind, const FragmentPair& pair,
                          const CampaignConfig& config, int trial, std::uint64_t seed) {
    TrialRecord rec;
    rec.test_point_id = pt.target->test_point_id;
    rec.target = pt.target->name;
    rec.trial = trial;
    rec.trial_seed = seed;
    rec.estimator = kind;
    rec.rst_truth = pt.target->params.rst.as_report_vector();

    const auto start = std::chrono::steady_clock::now();
    RstParams hat;
    try {
        if (kind == EstimatorKind::Ml) {
            hat = estimate_ml(pair, pt.initial, config.ml).params_hat.rst;
        } else {
            const auto m = kind == EstimatorKind::Ncc ? SimilarityMeasure::Ncc : SimilarityMeasure::Ssd;
            hat = estimate_baseline(pair, pt.initial, m, config.baseline).rst_hat;
        }
    } catch (const Error& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    if (config.record_runtime) {
        rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    if (rec.failed) {
        rec.rst_hat.setConstant(kNan);
        rec.absolute_error.setConstant(kNan);
        rec.normalized_error.setConstant(kNan);
        rec.q_statistic = kNan;
        rec.outlier = true;
        return rec;
    }
    rec.rst_hat = hat.as_report_vector();
    rec.absolute_error = rec.rst_hat - rec.rst_truth;
    if (pt.bound) {
        rec.normalized_error = rec.absolute_error.cwiseQuotient(pt.bound->sigma_rst);
        const OutlierVerdict v = outlier_test(hat, pt.target->params.rst, pt.bound->rst_cov, config.outlier_tail);
        rec.q_statistic = v.q;
        rec.outlier = v.is_outlier;
    } else {
        rec.normalized_error.setConstant(kNan);
        rec.q_statistic = kNan;
    }
    return rec;
}

}  // namespace

std::string_view to_string(EstimatorKind k) noexcept {
    switch (k) {
        case EstimatorKind::Ml: return "ml";
        case EstimatorKind::Ncc: return "ncc";
        case EstimatorKind::Ssd: return "ssd";
    }
    return "?";
}

EstimatorKind estimator_from_string(std::string_view name) {
    if (name == "ml") {
        return EstimatorKind::Ml;
    }
    if (name == "ncc") {
        return EstimatorKind::Ncc;
    }
    if (name == "ssd") {
        return EstimatorKind::Ssd;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "' (expected ml, ncc or ssd)");
}

CampaignTarget CampaignTarget::from_test_point(int id) {
    const TestPoint tp = test_point(id);
    return {id, "tp" + std::to_string(id), tp.params, tp.geometry, tp.noise()};
}

double outlier_rate(const std::vector<TrialRecord>& records) {
    if (records.empty()) {
        return 0.0;
    }
    const auto n = std::count_if(records.begin(), records.end(), [](const TrialRecord& r) { return r.outlier; });
    return static_cast<double>(n) / static_cast<double>(records.size());
}

EstimatorStats summarize(const std::vector<TrialRecord>& records, const Vector4& sigma_rst, double q_threshold) {
    EstimatorStats s;
    if (!records.empty()) {
        s.test_point_id = records.front().test_point_id;
        s.target = records.front().target;
        s.estimator = records.front().estimator;
    }
    s.trials = static_cast<int>(records.size());
    s.sigma_rst = sigma_rst;
    s.q_threshold = q_threshold;
    std::vector<Vector4> est;
    std::vector<Vector4> norm;
    Vector4 truth = Vector4::Zero();
    for (const auto& r : records) {
        if (r.failed) {
            ++s.failed;
            continue;
        }
        est.push_back(r.rst_hat);
        norm.push_back(r.normalized_error);
        truth = r.rst_truth;
    }
    const RobustSummary rs = robust_stats(est, truth);
    s.bias = rs.bias;
    s.robust_std = rs.robust_std;
    s.mse = s.robust_std.cwiseAbs2() + s.bias.cwiseAbs2();
    s.efficiency = 100.0 * sigma_rst.cwiseAbs2().cwiseQuotient(s.mse);
    s.mean_efficiency = s.efficiency.mean();
    s.efficiency_exceeds_bound = (s.efficiency.array() > 100.0).any();
    s.normalized_robust_std = robust_stats(norm, Vector4::Zero()).robust_std;
    s.p_out = outlier_rate(records);

    // Crude screen: any component further than 4 robust STDs from the median.
    const Vector4 med = truth - s.bias;
    std::vector<Vector4> kept;
    int crude = s.failed;
    for (const auto& e : est) {
        if (((e - med).cwiseAbs().array() > 4.0 * s.robust_std.array()).any()) {
            ++crude;
        } else {
            kept.push_back(e);
        }
    }
    s.crude_outlier_rate = static_cast<double>(crude) / static_cast<double>(s.trials);
    if (kept.size() >= 3) {
        const RobustSummary fs = robust_stats(kept, truth);
        s.filtered_bias = fs.bias;
        s.filtered_robust_std = fs.robust_std;
    } else {
        s.filtered_bias.setConstant(kNan);
        s.filtered_robust_std.setConstant(kNan);
    }
    return s;
}

int default_thread_count() {
    if (const char* env = std::getenv("FBMREG_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) {
            return v;
        }
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

RstParams simulation_initial_guess(const RstParams& truth) {
    return {std::round(truth.dt), std::round(truth.ds), truth.alpha, truth.dr};
}

CampaignResult run_campaign(const CampaignConfig& config, const TrialCallback& on_trial) {
    if (config.trials < 0 || config.first_trial < 0) {
        throw Error(ErrorCode::InvalidArgument, "trial counts must be non-negative");
    }
    CampaignResult result;
    if (config.trials == 0 || config.targets.empty() || config.estimators.empty()) {
        return result;
    }
    std::vector<PreparedTarget> prepared;
    prepared.reserve(config.targets.size());
    for (const auto& t : config.targets) {
        std::optional<CrlbResult> bound;
        try {
            bound = crlb(t.params, t.geometry, t.noise);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingularFim) {
                throw;
            }
        }
        prepared.push_back({&t, PairSimulator(t.params, t.geometry, t.noise),
                            simulation_initial_guess(t.params.rst), bound});
    }

    const std::size_t n_est = config.estimators.size();
    const auto n_trials = static_cast<std::size_t>(config.trials);
    std::vector<TrialRecord> slots(prepared.size() * n_est * n_trials);
    const std::size_t jobs = prepared.size() * n_trials;
    std::atomic<std::size_t> next{0};
    std::mutex callback_mutex;

    auto worker = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            const std::size_t ti = job / n_trials;
            const std::size_t k = job % n_trials;
            const int trial = config.first_trial + static_cast<int>(k);
            const std::uint64_t seed = config.seed_base + static_cast<std::uint64_t>(trial);
            const PreparedTarget& pt = prepared[ti];
            const FragmentPair pair = pt.simulator.draw(seed);
            for (std::size_t e = 0; e < n_est; ++e) {
                TrialRecord rec = run_estimator(pt, config.estimators[e], pair, config, trial, seed);
                if (on_trial) {
                    const std::scoped_lock lock(callback_mutex);
                    on_trial(rec);
                }
                slots[(ti * n_est + e) * n_trials + k] = std::move(rec);
            }
        }
    };
    const int threads = std::min<int>(config.threads > 0 ? config.threads : default_thread_count(),
                                      static_cast<int>(jobs));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < threads; ++i) {
            pool.emplace_back(worker);
        }
    }

    result.records = std::move(slots);
    const double q_th = chi2_4_upper_quantile(config.outlier_tail);
    for (std::size_t ti = 0; ti < prepared.size(); ++ti) {
        for (std::size_t e = 0; e < n_est; ++e) {
            const auto first = result.records.begin() + static_cast<std::ptrdiff_t>((ti * n_est + e) * n_trials);
            const std::vector<TrialRecord> group(first, first + static_cast<std::ptrdiff_t>(n_trials));
            const auto ok = std::count_if(group.begin(), group.end(), [](const TrialRecord& r) { return !r.failed; });
            if (ok < 3) {
                continue;
            }
            Vector4 sigma = Vector4::Constant(kNan);
            if (prepared[ti].bound) {
                sigma = prepared[ti].bound->sigma_rst;
            }
            result.stats.push_back(summarize(group, sigma, q_th));
        }
    }
    return result;
}

}  // namespace fbmreg
