#include "fbmreg/interpolation.hpp"

#include "fbmreg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fbmreg {

SplineOperator::SplineOperator(int n) {
    if (n < 4) {
        throw Error(ErrorCode::InvalidArgument, "not-a-knot spline needs at least 4 knots");
    }
    // Interior rows: M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]);
    // end rows force a continuous third derivative at the second and the
    // second-to-last knot.
    Matrix a = Matrix::Zero(n, n);
    Matrix d = Matrix::Zero(n, n);
    a(0, 0) = 1.0;
    a(0, 1) = -2.0;
    a(0, 2) = 1.0;
    a(n - 1, n - 3) = 1.0;
    a(n - 1, n - 2) = -2.0;
    a(n - 1, n - 1) = 1.0;
    for (int i = 1; i < n - 1; ++i) {
        a(i, i - 1) = 1.0;
        a(i, i) = 4.0;
        a(i, i + 1) = 1.0;
        d(i, i - 1) = 6.0;
        d(i, i) = -12.0;
        d(i, i + 1) = 6.0;
    }
    op_ = a.partialPivLu().solve(d);
}

double SplineOperator::evaluate(Eigen::Ref<const Vector> y, Eigen::Ref<const Vector> m, double x) noexcept {
    const auto n = y.size();
    const auto i = static_cast<Eigen::Index>(std::clamp(std::floor(x), 0.0, static_cast<double>(n - 2)));
    const double u = x - static_cast<double>(i);
    const double w = 1.0 - u;
    return w * y[i] + u * y[i + 1] + ((w * w * w - w) * m[i] + (u * u * u - u) * m[i + 1]) / 6.0;
}

FragmentInterpolator::FragmentInterpolator(const Fragment& fragment)
    : fragment_(fragment), spline_(fragment.size()), column_m_(spline_.size(), spline_.size()) {
    const Matrix& p = fragment_.pixels();
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        column_m_.col(j) = spline_.second_derivatives(p.col(j));
    }
}

bool FragmentInterpolator::inside(double t, double s) const noexcept {
    constexpr double kEdge = 1e-9;
    const double h = static_cast<double>(fragment_.half()) + kEdge;
    return std::abs(t) <= h && std::abs(s) <= h;
}

double FragmentInterpolator::at(double t, double s) const {
    const Matrix& p = fragment_.pixels();
    const auto n = p.rows();
    const double h = static_cast<double>(fragment_.half());
    const double x = std::clamp(t + h, 0.0, static_cast<double>(n - 1));
    const double z = std::clamp(s + h, 0.0, static_cast<double>(n - 1));
    Vector row(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        row[j] = SplineOperator::evaluate(p.col(j), column_m_.col(j), x);
    }
    return SplineOperator::evaluate(row, spline_.second_derivatives(row), z);
}

}  // namespace fbmreg
