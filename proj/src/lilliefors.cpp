#include "fbmreg/lilliefors.hpp"

#include "fbmreg/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace fbmreg {

namespace {

#include "lilliefors_table.inc"

constexpr std::size_t kNumSizes = kLillieforsSizes.size();
constexpr std::size_t kNumAlphas = kLillieforsAlphas.size();

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Scaled critical value crit * sqrt(n) at a tabulated alpha column, linear
// in 1/sqrt(n) between sizes and held constant beyond the largest size.
double scaled_critical(int n, std::size_t col) {
    const auto& sizes = kLillieforsSizes;
    auto scaled = [&](std::size_t row) {
        return kLillieforsCritical[row][col] * std::sqrt(static_cast<double>(sizes[row]));
    };
    if (n >= sizes.back()) {
        return scaled(kNumSizes - 1);
    }
    const auto it = std::lower_bound(sizes.begin(), sizes.end(), n);
    const auto hi = static_cast<std::size_t>(it - sizes.begin());
    if (sizes[hi] == n || hi == 0) {
        return scaled(hi);
    }
    const std::size_t lo = hi - 1;
    const double x = 1.0 / std::sqrt(static_cast<double>(n));
    const double x0 = 1.0 / std::sqrt(static_cast<double>(sizes[lo]));
    const double x1 = 1.0 / std::sqrt(static_cast<double>(sizes[hi]));
    const double w = (x - x0) / (x1 - x0);
    return (1.0 - w) * scaled(lo) + w * scaled(hi);
}

}  // namespace

std::span<const double> lilliefors_table_alphas() noexcept { return kLillieforsAlphas; }
std::span<const int> lilliefors_table_sizes() noexcept { return kLillieforsSizes; }

double lilliefors_statistic(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 2) {
        throw Error(ErrorCode::InvalidArgument, "Lilliefors test needs at least two observations");
    }
    double mean = 0.0;
    for (double v : sample) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : sample) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        return 1.0;
    }
    std::vector<double> z(sample.begin(), sample.end());
    std::sort(z.begin(), z.end());
    double d = 0.0;
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = normal_cdf((z[i] - mean) / sd);
        d = std::max({d, static_cast<double>(i + 1) / dn - f, f - static_cast<double>(i) / dn});
    }
    return d;
}

double lilliefors_critical(int n, double alpha) {
    if (n < kLillieforsSizes.front()) {
        throw Error(ErrorCode::InvalidArgument,
                    "Lilliefors table starts at n = " + std::to_string(kLillieforsSizes.front()));
    }
    const auto& alphas = kLillieforsAlphas;  // descending
    if (!(alpha <= alphas.front() + 1e-12 && alpha >= alphas.back() - 1e-12)) {
        throw Error(ErrorCode::InvalidArgument, "significance must lie in [0.01, 0.20]");
    }
    std::size_t col = 0;
    while (col + 1 < kNumAlphas && alphas[col + 1] >= alpha - 1e-12) {
        ++col;
    }
    double scaled = scaled_critical(n, col);
    if (std::abs(alphas[col] - alpha) > 1e-12 && col + 1 < kNumAlphas) {
        // Between two columns: linear in log(alpha).
        const double w = (std::log(alpha) - std::log(alphas[col])) /
                         (std::log(alphas[col + 1]) - std::log(alphas[col]));
        scaled = (1.0 - w) * scaled + w * scaled_critical(n, col + 1);
    }
    return scaled / std::sqrt(static_cast<double>(n));
}

LillieforsResult lilliefors_test(std::span<const double> sample, double alpha) {
    LillieforsResult r;
    r.statistic = lilliefors_statistic(sample);
    r.critical = lilliefors_critical(static_cast<int>(sample.size()), alpha);
    r.reject = r.statistic > r.critical;
    return r;
}

}  // namespace fbmreg
