#pragma once

// Monte-Carlo campaigns: simulate pairs at configured parameter points, run
// the estimators, and summarize errors against the Cramer-Rao bound.

#include "fbmreg/baselines.hpp"
#include "fbmreg/likelihood.hpp"
#include "fbmreg/simulate.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fbmreg {

enum class EstimatorKind { Ml, Ncc, Ssd };

[[nodiscard]] std::string_view to_string(EstimatorKind k) noexcept;
[[nodiscard]] EstimatorKind estimator_from_string(std::string_view name);

/// A parameter point of a campaign: a catalogue entry or inline values.
struct CampaignTarget {
    int test_point_id{0};  ///< 0 for inline targets
    std::string name;
    FullParams params;
    PairGeometry geometry;
    NoiseVariances noise;

    [[nodiscard]] static CampaignTarget from_test_point(int id);
};

struct CampaignConfig {
    std::vector<CampaignTarget> targets;
    std::vector<EstimatorKind> estimators;
    int trials{0};
    std::uint64_t seed_base{0};
    int first_trial{0};  ///< trial indices run from first_trial to first_trial + trials - 1
    int threads{0};      ///< 0: FBMREG_THREADS or hardware concurrency
    bool record_runtime{false};
    double outlier_tail{1e-6};
    std::string output;  ///< report path prefix (.json / .csv appended)
    MlOptions ml;
    BaselineOptions baseline;
};

/// RST vectors are in report units: (dt, ds, alpha in degrees, dr).
struct TrialRecord {
    int test_point_id{0};
    std::string target;
    int trial{0};
    std::uint64_t trial_seed{0};
    EstimatorKind estimator{EstimatorKind::Ml};
    bool failed{false};
    std::string error;
    Vector4 rst_hat{Vector4::Zero()};
    Vector4 rst_truth{Vector4::Zero()};
    Vector4 absolute_error{Vector4::Zero()};    ///< estimate - truth
    Vector4 normalized_error{Vector4::Zero()};  ///< absolute_error ./ sigma_rst
    double q_statistic{0.0};
    bool outlier{false};
    double runtime_s{0.0};
};

struct EstimatorStats {
    int test_point_id{0};
    std::string target;
    EstimatorKind estimator{EstimatorKind::Ml};
    int trials{0};
    int failed{0};
    Vector4 sigma_rst;  ///< bound at the true parameters
    Vector4 bias;
    Vector4 robust_std;
    Vector4 mse;
    Vector4 efficiency;  ///< percent
    double mean_efficiency{0.0};
    bool efficiency_exceeds_bound{false};
    Vector4 normalized_robust_std;
    double p_out{0.0};
    double q_threshold{0.0};
    double crude_outlier_rate{0.0};  ///< any component beyond 4 robust STDs of the median
    Vector4 filtered_bias;
    Vector4 filtered_robust_std;
};

struct CampaignResult {
    std::vector<TrialRecord> records;
    std::vector<EstimatorStats> stats;
};

/// Fraction of records with Q above threshold; failed trials count as outliers.
[[nodiscard]] double outlier_rate(const std::vector<TrialRecord>& records);

/// Aggregates records of one (target, estimator). Requires >= 3 successful trials.
[[nodiscard]] EstimatorStats summarize(const std::vector<TrialRecord>& records, const Vector4& sigma_rst,
                                       double q_threshold);

/// Threads from FBMREG_THREADS if set and positive, otherwise hardware concurrency.
[[nodiscard]] int default_thread_count();

/// Initial RST guess for simulated trials: truth with translation rounded
/// to the nearest integers.
[[nodiscard]] RstParams simulation_initial_guess(const RstParams& truth);

using TrialCallback = std::function<void(const TrialRecord&)>;

/// Runs every (target, estimator, trial). Estimator failures are recorded,
/// never thrown. Records are ordered by target, estimator, trial.
[[nodiscard]] CampaignResult run_campaign(const CampaignConfig& config, const TrialCallback& on_trial = {});

}  // namespace fbmreg
