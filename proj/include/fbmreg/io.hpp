#pragma once

// File formats: the fragment CSV, campaign configuration and the JSON/CSV
// reports. JSON uses nlohmann::json.

#include "fbmreg/baselines.hpp"
#include "fbmreg/bench.hpp"
#include "fbmreg/crlb.hpp"
#include "fbmreg/likelihood.hpp"
#include "fbmreg/screening.hpp"
#include "fbmreg/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace fbmreg {

using Json = nlohmann::ordered_json;

/// Fragment file:
///   # fbmreg fragment v1
///   # size=<N> noise_var=<v>
///   # layout: row-major; row i is t = i - (N-1)/2, column j is s = j - (N-1)/2
/// followed by N lines of N comma-separated values (17 significant digits).
[[nodiscard]] std::string format_fragment(const Fragment& fragment);
[[nodiscard]] Fragment parse_fragment(std::string_view text);

[[nodiscard]] Fragment read_fragment(const std::filesystem::path& path);
void write_fragment(const std::filesystem::path& path, const Fragment& fragment);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

/// Parameters as JSON with alpha in degrees ("alpha_deg").
[[nodiscard]] Json to_json(const FullParams& p);
[[nodiscard]] Json to_json(const RstParams& p);
[[nodiscard]] Json to_json(const TextureParams& p);
[[nodiscard]] FullParams full_params_from_json(const Json& j);
[[nodiscard]] RstParams rst_from_json(const Json& j);

[[nodiscard]] Json to_json(const CrlbResult& c, bool include_cov);
[[nodiscard]] Json to_json(const ScreeningReport& r);
[[nodiscard]] Json to_json(const MlEstimate& e);
[[nodiscard]] Json to_json(const SimilarityEstimate& e);
[[nodiscard]] Json to_json(const EstimatorStats& s);
[[nodiscard]] Json to_json(const TestPoint& tp);

/// Campaign configuration:
///   { "test_points": [1, 2], "targets": [ {inline target} ], "estimators": ["ml", "ncc"],
///     "trials": 200, "seed_base": 42, "first_trial": 0, "threads": 0,
///     "record_runtime": false, "outlier_tail": 1e-6, "output": "reports/tp1" }
/// An inline target carries "name", "params" (as to_json(FullParams)), "n_ri", "n_ti",
/// "noise_std_ri", "noise_std_ti". Unknown keys are rejected.
[[nodiscard]] CampaignConfig campaign_config_from_json(const Json& j);

/// Report JSON: schema tag, echo of the configuration and one stats entry per
/// (target, estimator).
[[nodiscard]] Json campaign_report_json(const CampaignConfig& config, const CampaignResult& result);

/// One row per TrialRecord; runtime column only when recorded.
[[nodiscard]] std::string records_csv(const std::vector<TrialRecord>& records, bool include_runtime);

/// Writes <prefix>.json and <prefix>.csv atomically.
void write_campaign_report(const std::filesystem::path& prefix, const CampaignConfig& config,
                           const CampaignResult& result);

}  // namespace fbmreg
