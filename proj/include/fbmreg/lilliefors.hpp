#pragma once

// Lilliefors normality test: Kolmogorov-Smirnov distance to the normal
// distribution fitted by sample mean and sample STD, with critical values
// from a Monte-Carlo table.

#include <span>
#include <vector>

namespace fbmreg {

struct LillieforsResult {
    double statistic{0.0};
    double critical{0.0};
    bool reject{false};
};

/// KS statistic against N(mean, sd^2), sd with n - 1 denominator. Returns 1
/// for samples with zero spread.
[[nodiscard]] double lilliefors_statistic(std::span<const double> sample);

/// Critical value of the statistic at significance alpha in [0.01, 0.20]
/// for sample size n >= 4.
[[nodiscard]] double lilliefors_critical(int n, double alpha);

/// Rejects normality when statistic > critical. Constant samples always reject.
[[nodiscard]] LillieforsResult lilliefors_test(std::span<const double> sample, double alpha);

/// Significance levels and sample sizes tabulated by the shipped table.
[[nodiscard]] std::span<const double> lilliefors_table_alphas() noexcept;
[[nodiscard]] std::span<const int> lilliefors_table_sizes() noexcept;

}  // namespace fbmreg
