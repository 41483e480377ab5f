#pragma once

// Robust location/scale summaries used by the benchmark harness.

#include "fbmreg/types.hpp"

#include <vector>

namespace fbmreg {

/// Median; even lengths average the two central order statistics.
[[nodiscard]] double median(std::vector<double> values);

/// Median absolute deviation from the median.
[[nodiscard]] double mad(const std::vector<double>& values);

inline constexpr double kMadToStd = 1.48;

struct RobustSummary {
    Vector4 bias;        ///< truth - median(estimates)
    Vector4 robust_std;  ///< 1.48 * MAD
};

/// Per-component robust bias and STD. Estimates and truth must share units.
/// Requires at least three estimates.
[[nodiscard]] RobustSummary robust_stats(const std::vector<Vector4>& estimates, const Vector4& truth);

}  // namespace fbmreg
