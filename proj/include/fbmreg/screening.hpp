#pragma once

// Fragment screening: isotropy of the sample autocorrelation and normality
// of unit-lag increments, combined into groups I-IV.

#include "fbmreg/lilliefors.hpp"
#include "fbmreg/types.hpp"

#include <string_view>

namespace fbmreg {

inline constexpr int kAutocorrelationMaxLag = 3;
inline constexpr double kIsotropyRatioLimit = 2.0;
inline constexpr double kNormalitySignificance = 0.01;

/// Coefficients of r(di, dj) = a di^2 + b dj^2 + 2 c di dj + d di + e dj + f.
struct QuadraticFit {
    double a{0.0};
    double b{0.0};
    double c{0.0};
    double d{0.0};
    double e{0.0};
    double f{0.0};
};

struct IsotropyResult {
    bool isotropic{false};
    double eigen_ratio{0.0};  ///< |lambda|_max / |lambda|_min of [[a, c], [c, b]]
    QuadraticFit fit;
};

struct NormalityResult {
    bool normal{false};
    LillieforsResult vertical;
    LillieforsResult horizontal;
};

enum class ScreeningGroup { I, II, III, IV };

[[nodiscard]] std::string_view to_string(ScreeningGroup g) noexcept;
[[nodiscard]] ScreeningGroup group_of(bool isotropic, bool normal) noexcept;

struct ScreeningReport {
    bool isotropic{false};
    double eigen_ratio{0.0};
    bool normal{false};
    LillieforsResult lilliefors_vertical;
    LillieforsResult lilliefors_horizontal;
    ScreeningGroup group{ScreeningGroup::IV};
};

/// Mean-removed sample autocorrelation on lags |di|, |dj| <= max_lag (biased
/// estimator: lag sums divided by N^2), normalized by the zero-lag value;
/// entry (di + L, dj + L). Throws
/// DegenerateFit for a constant fragment.
[[nodiscard]] Matrix sample_autocorrelation(const Fragment& fragment, int max_lag = kAutocorrelationMaxLag);

/// Least-squares quadratic fit of an autocorrelation grid of odd size and
/// the eigenvalue test on its curvature matrix. Throws DegenerateFit if the
/// curvature matrix is singular.
[[nodiscard]] IsotropyResult isotropy_from_autocorrelation(const Matrix& acf);

/// Requires fragment size >= 7.
[[nodiscard]] IsotropyResult isotropy_test(const Fragment& fragment);

/// Lilliefors on vertical and horizontal unit-lag increments. Requires size >= 5.
[[nodiscard]] NormalityResult normality_test(const Fragment& fragment, double alpha = kNormalitySignificance);

/// Both tests are applied to the template fragment.
[[nodiscard]] ScreeningReport classify(const FragmentPair& pair);

}  // namespace fbmreg
