#pragma once

// Fisher information of the joint Gaussian fragment model, the Cramer-Rao
// covariance bound derived from it and the chi-square outlier statistic.

#include "fbmreg/fbm_model.hpp"
#include "fbmreg/types.hpp"

namespace fbmreg {

/// 8x8 FIM ordered (sigma_ri, sigma_ti, H, k_rt, dt, ds, alpha, dr), alpha in radians.
struct FisherInfo {
    Matrix8 matrix;
};

struct CrlbResult {
    Matrix8 cov;          ///< full inverse FIM (alpha in radians)
    Vector8 sigma_theta;  ///< sqrt(diag(cov)), alpha in radians
    Vector4 sigma_rst;    ///< (dt, ds, alpha, dr) STD bounds, alpha in degrees
    Matrix4 rst_cov;      ///< RST sub-block of cov, alpha in radians
};

struct OutlierVerdict {
    double q{0.0};
    double threshold{0.0};
    bool is_outlier{false};
};

inline constexpr double kDefaultOutlierTail = 1e-6;

/// FIM condition numbers above this (after diagonal equilibration) raise SingularFim.
inline constexpr double kMaxFimCondition = 1e12;

[[nodiscard]] FisherInfo fisher_info(const FullParams& params, PairGeometry geometry, NoiseVariances noise);
[[nodiscard]] FisherInfo fisher_info(const CorrelationModel& model, const FullParams& params, NoiseVariances noise);

/// Inverts a FIM. Throws SingularFim naming the dominant parameter of the
/// null direction when the matrix is (numerically) singular.
[[nodiscard]] CrlbResult crlb_from_fisher(const FisherInfo& fim);

[[nodiscard]] CrlbResult crlb(const FullParams& params, PairGeometry geometry, NoiseVariances noise);

/// Upper tail P(X > q) of the chi-square distribution with 4 degrees of freedom.
[[nodiscard]] double chi2_4_upper_tail(double q) noexcept;

/// q with P(X > q) = tail for 4 degrees of freedom; tail in (0, 1).
[[nodiscard]] double chi2_4_upper_quantile(double tail);

/// Q = d^T C^-1 d with d = theta_hat - theta_ref (alpha in radians in both
/// the deviation and rst_cov). Throws SingularCovariance if rst_cov is not
/// positive definite.
[[nodiscard]] OutlierVerdict outlier_test(const RstParams& theta_hat, const RstParams& theta_ref,
                                          const Matrix4& rst_cov, double tail = kDefaultOutlierTail);

}  // namespace fbmreg
