#pragma once

// Separable not-a-knot cubic spline interpolation of a fragment on its
// integer lattice. Exact for polynomials of degree three in each axis.

#include "fbmreg/types.hpp"

namespace fbmreg {

/// Maps samples on knots 0..n-1 (unit spacing) to the spline's second
/// derivatives at the knots. Requires n >= 4.
class SplineOperator {
public:
    explicit SplineOperator(int n);

    [[nodiscard]] int size() const noexcept { return static_cast<int>(op_.rows()); }
    [[nodiscard]] Vector second_derivatives(const Vector& y) const { return op_ * y; }

    /// Spline value at x in [0, n-1] given knot values and second derivatives.
    [[nodiscard]] static double evaluate(Eigen::Ref<const Vector> y, Eigen::Ref<const Vector> m, double x) noexcept;

private:
    Matrix op_;
};

/// Interpolates a fragment at arbitrary centered coordinates (t, s).
class FragmentInterpolator {
public:
    explicit FragmentInterpolator(const Fragment& fragment);

    /// True if (t, s) lies inside the lattice support (borders included).
    [[nodiscard]] bool inside(double t, double s) const noexcept;

    /// Spline value; (t, s) must be inside.
    [[nodiscard]] double at(double t, double s) const;

private:
    Fragment fragment_;
    SplineOperator spline_;
    Matrix column_m_;  ///< second derivatives along t for each column
};

}  // namespace fbmreg
