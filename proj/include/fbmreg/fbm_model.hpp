#pragma once

// Fractional-Brownian-motion model of a reference/template fragment pair:
// the RST coordinate mapping, the fBm structure-function covariances and the
// joint correlation matrix of the stacked, origin-referenced sample together
// with its analytic partial derivatives.
//
// Layout of the joint matrix (ri = N_RI^2, ti = N_TI^2 rows):
//
//     [ s_ri^2 U_ri + n_ri I         k s_ri s_ti H_rt ]
//     [ k s_ri s_ti H_rt^T           s_ti^2 U_ti + n_ti I ]
//
// where U_xx are the unit-amplitude fBm auto-covariances and H_rt the
// unit-amplitude cross-covariance of the geometrically transformed texture.

#include "fbmreg/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace fbmreg {

/// Maps a reference point (t, s) into template coordinates (u, v):
/// (u, v) = dr * Rot(alpha) * (t, s) + (dt, ds).
[[nodiscard]] Point2 rst_forward(Point2 ref, const RstParams& rst) noexcept;

/// Inverse mapping of a template point (u, v) back into reference coordinates.
[[nodiscard]] Point2 rst_inverse_coords(Point2 tpl, const RstParams& rst) noexcept;

/// x^h with the limit convention 0^h = 0 for every h (including h = 0).
[[nodiscard]] double pow_h(double x, double h) noexcept;

/// x^h * log(x) with the limit convention 0 at x = 0.
[[nodiscard]] double pow_h_log(double x, double h) noexcept;

/// Centered pixel coordinates of an N x N fragment in column-major order.
class PixelIndexMap {
public:
    explicit PixelIndexMap(int n);

    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] int count() const noexcept { return static_cast<int>(points_.size()); }
    [[nodiscard]] int origin_index() const noexcept { return half_ + half_ * n_; }
    [[nodiscard]] const Point2& operator[](int k) const { return points_[static_cast<std::size_t>(k)]; }
    [[nodiscard]] std::span<const Point2> points() const noexcept { return points_; }

    /// Index of the integer point (t, s), which must lie on the grid.
    [[nodiscard]] int index_of(int t, int s) const noexcept { return (t + half_) + (s + half_) * n_; }

private:
    int n_;
    int half_;
    std::vector<Point2> points_;
};

/// fBm auto-covariance between two pixels of one fragment.
[[nodiscard]] double corr_ri(int k1, int k2, double sigma_x, double hurst, const PixelIndexMap& map);

/// Unit-amplitude cross-covariance between RI pixel k and TI pixel l.
[[nodiscard]] double corr_hrt(int k, int l, double hurst, const RstParams& rst, const PixelIndexMap& ri_map,
                              const PixelIndexMap& ti_map);

/// Joint correlation matrix with its block-layout metadata.
struct JointCorrelation {
    Matrix matrix;
    int n_ri{0};
    int n_ti{0};

    [[nodiscard]] int ri_count() const noexcept { return n_ri * n_ri; }
    [[nodiscard]] int ti_count() const noexcept { return n_ti * n_ti; }
    [[nodiscard]] auto ri_block() const { return matrix.topLeftCorner(ri_count(), ri_count()); }
    [[nodiscard]] auto ti_block() const { return matrix.bottomRightCorner(ti_count(), ti_count()); }
    [[nodiscard]] auto cross_block() const { return matrix.topRightCorner(ri_count(), ti_count()); }
};

/// Unit-amplitude building blocks of the joint matrix for one (H, RST) point.
struct ModelBlocks {
    double hurst{0.5};
    RstParams rst;

    Matrix unit_ri;   ///< U_ri
    Matrix unit_ti;   ///< U_ti
    Matrix unit_hrt;  ///< H_rt (ri x ti)

    bool has_derivatives{false};
    Matrix d_unit_ri_h;  ///< dU_ri / dH
    Matrix d_unit_ti_h;  ///< dU_ti / dH
    Matrix d_hrt_h;      ///< dH_rt / dH
    std::array<Matrix, kNumRstParams> d_hrt_rst;  ///< dH_rt / d(dt, ds, alpha, dr)
};

/// Precomputes geometry-only quantities for a fixed pair of fragment sizes so
/// that the joint matrix and its derivatives can be rebuilt cheaply for many
/// parameter values. Immutable after construction; safe to share.
class CorrelationModel {
public:
    explicit CorrelationModel(PairGeometry geometry);

    [[nodiscard]] const PairGeometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] const PixelIndexMap& ri_map() const noexcept { return ri_map_; }
    [[nodiscard]] const PixelIndexMap& ti_map() const noexcept { return ti_map_; }

    [[nodiscard]] ModelBlocks blocks(double hurst, const RstParams& rst, bool with_derivatives) const;

    /// Joint matrix at params; blocks must have been computed for the same H and RST.
    [[nodiscard]] JointCorrelation assemble(const FullParams& params, const ModelBlocks& blocks,
                                            NoiseVariances noise) const;

    /// dR / d theta(which), dense, same shape as the joint matrix.
    [[nodiscard]] Matrix assemble_derivative(const FullParams& params, const ModelBlocks& blocks,
                                             ParamIndex which) const;

    /// Frobenius products <weights, dR/d theta(i)> for all eight parameters,
    /// computed blockwise without materializing the derivative matrices.
    /// weights must be symmetric.
    [[nodiscard]] Vector8 contract_derivatives(const FullParams& params, const ModelBlocks& blocks,
                                               const Matrix& weights) const;

    /// Convenience wrappers building the blocks internally.
    [[nodiscard]] JointCorrelation build(const FullParams& params, NoiseVariances noise) const;
    [[nodiscard]] Matrix derivative(const FullParams& params, ParamIndex which) const;

private:
    void fill_auto_block(const PixelIndexMap& map, double hurst, Matrix& unit, Matrix* d_unit_h) const;

    PairGeometry geometry_;
    PixelIndexMap ri_map_;
    PixelIndexMap ti_map_;
};

/// Assembles the joint correlation matrix. Throws DegenerateModel when both
/// noise variances vanish and |k_rt| = 1.
[[nodiscard]] JointCorrelation build_joint_correlation(const FullParams& params, PairGeometry geometry,
                                                       NoiseVariances noise);

/// Analytic partial derivative of the joint matrix w.r.t. one parameter.
[[nodiscard]] Matrix d_joint_correlation(const FullParams& params, ParamIndex which, PairGeometry geometry);

}  // namespace fbmreg
