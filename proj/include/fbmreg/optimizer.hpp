#pragma once

// Box-constrained sequential quadratic programming: damped BFGS model,
// active-set box QP subproblem and backtracking line search. The objective
// may refuse a point (returning nullopt) and the line search then backs off.

#include "fbmreg/types.hpp"

#include <functional>
#include <optional>
#include <string>

namespace fbmreg {

struct SqpOptions {
    double step_tol{1e-6};
    double f_tol{1e-8};
    int max_iterations{200};
    double armijo{1e-4};
    int max_backtracks{40};
};

struct BoxBounds {
    Vector lower;
    Vector upper;

    [[nodiscard]] Vector clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
    [[nodiscard]] bool contains(const Vector& x) const {
        return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
    }
};

/// Minimization target. value() returns nullopt for points outside the
/// objective's domain; gradient() is only called at points where value()
/// succeeded.
struct Objective {
    std::function<std::optional<double>(const Vector&)> value;
    std::function<std::optional<Vector>(const Vector&)> gradient;
};

struct SqpResult {
    Vector x;
    double f{0.0};
    int iterations{0};
    int evaluations{0};
    bool converged{false};
    bool failed{false};
    std::string status;
};

/// min g^T p + 1/2 p^T B p subject to lower <= p <= upper, where B is
/// symmetric positive definite and lower <= 0 <= upper.
[[nodiscard]] Vector solve_box_qp(const Matrix& b, const Vector& g, const Vector& lower, const Vector& upper);

/// Runs the SQP from x0 (clamped into the box). hessian0 seeds the BFGS
/// model; it is symmetrized and its eigenvalues floored to keep it positive
/// definite.
[[nodiscard]] SqpResult minimize_box_sqp(const Objective& objective, const Vector& x0, const BoxBounds& bounds,
                                         const Matrix& hessian0, const SqpOptions& options = {});

/// Central-difference gradient, one-sided next to a bound. Step per
/// coordinate is rel_step * max(|x_i|, 1). Returns nullopt if any probe fails.
[[nodiscard]] std::optional<Vector> fd_gradient(const std::function<std::optional<double>(const Vector&)>& f,
                                                const Vector& x, const BoxBounds& bounds, double rel_step = 1e-5);

/// Finite-difference Hessian of values (symmetric). Returns nullopt if any probe fails.
[[nodiscard]] std::optional<Matrix> fd_hessian(const std::function<std::optional<double>(const Vector&)>& f,
                                               const Vector& x, const BoxBounds& bounds, double rel_step = 1e-3);

/// Symmetrizes and floors eigenvalues at floor_ratio * max(|lambda|, 1e-12).
[[nodiscard]] Matrix make_positive_definite(const Matrix& m, double floor_ratio = 1e-8);

}  // namespace fbmreg
