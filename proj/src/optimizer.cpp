#include "fbmreg/optimizer.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fbmreg {

namespace {

enum class BoundState { Free, Lower, Upper };

}  // namespace

Vector solve_box_qp(const Matrix& b, const Vector& g, const Vector& lower, const Vector& upper) {
    const Eigen::Index n = g.size();
    std::vector<BoundState> state(static_cast<std::size_t>(n), BoundState::Free);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (lower[i] >= 0.0 && g[i] > 0.0) {
            state[i] = BoundState::Lower;
        } else if (upper[i] <= 0.0 && g[i] < 0.0) {
            state[i] = BoundState::Upper;
        }
    }
    Vector p = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (state[i] == BoundState::Lower) {
            p[i] = lower[i];
        } else if (state[i] == BoundState::Upper) {
            p[i] = upper[i];
        }
    }

    const int max_rounds = static_cast<int>(4 * n + 10);
    for (int round = 0; round < max_rounds; ++round) {
        std::vector<Eigen::Index> free_idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (state[i] == BoundState::Free) {
                free_idx.push_back(i);
            }
        }
        Vector target = p;
        if (!free_idx.empty()) {
            const auto nf = static_cast<Eigen::Index>(free_idx.size());
            Matrix bff(nf, nf);
            Vector rhs(nf);
            for (Eigen::Index a = 0; a < nf; ++a) {
                double r = g[free_idx[a]];
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (state[j] != BoundState::Free) {
                        r += b(free_idx[a], j) * p[j];
                    }
                }
                rhs[a] = -r;
                for (Eigen::Index c = 0; c < nf; ++c) {
                    bff(a, c) = b(free_idx[a], free_idx[c]);
                }
            }
            const Vector pf = bff.ldlt().solve(rhs);
            for (Eigen::Index a = 0; a < nf; ++a) {
                target[free_idx[a]] = pf[a];
            }
        }

        // Walk towards the subproblem solution until the first bound blocks.
        double tau = 1.0;
        Eigen::Index blocking = -1;
        BoundState blocking_state = BoundState::Free;
        for (Eigen::Index i : free_idx) {
            const double d = target[i] - p[i];
            if (d < 0.0 && target[i] < lower[i]) {
                const double t = (lower[i] - p[i]) / d;
                if (t < tau) {
                    tau = t;
                    blocking = i;
                    blocking_state = BoundState::Lower;
                }
            } else if (d > 0.0 && target[i] > upper[i]) {
                const double t = (upper[i] - p[i]) / d;
                if (t < tau) {
                    tau = t;
                    blocking = i;
                    blocking_state = BoundState::Upper;
                }
            }
        }
        p += tau * (target - p);
        if (blocking >= 0) {
            state[blocking] = blocking_state;
            p[blocking] = blocking_state == BoundState::Lower ? lower[blocking] : upper[blocking];
            continue;
        }

        const Vector grad = g + b * p;
        Eigen::Index release = -1;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double violation = 0.0;
            if (state[i] == BoundState::Lower) {
                violation = -grad[i];
            } else if (state[i] == BoundState::Upper) {
                violation = grad[i];
            }
            if (violation > worst) {
                worst = violation;
                release = i;
            }
        }
        if (release < 0) {
            break;
        }
        state[release] = BoundState::Free;
    }
    return p.cwiseMax(lower).cwiseMin(upper);
}

Matrix make_positive_definite(const Matrix& m, double floor_ratio) {
    const Matrix sym = 0.5 * (m + m.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-12);
    const Vector lambda = es.eigenvalues().cwiseAbs().cwiseMax(floor_ratio * top);
    return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

SqpResult minimize_box_sqp(const Objective& objective, const Vector& x0, const BoxBounds& bounds,
                           const Matrix& hessian0, const SqpOptions& options) {
    SqpResult res;
    res.x = bounds.clamp(x0);
    const auto f0 = objective.value(res.x);
    ++res.evaluations;
    if (!f0) {
        res.failed = true;
        res.status = "objective undefined at the starting point";
        return res;
    }
    res.f = *f0;
    auto g = objective.gradient(res.x);
    if (!g) {
        res.failed = true;
        res.status = "gradient undefined at the starting point";
        return res;
    }

    const Matrix b0 = make_positive_definite(hessian0);
    Matrix b = b0;
    bool reset_used = false;

    for (res.iterations = 0; res.iterations < options.max_iterations;) {
        const Vector p = solve_box_qp(b, *g, bounds.lower - res.x, bounds.upper - res.x);
        if (p.norm() < options.step_tol) {
            res.converged = true;
            res.status = "step below tolerance";
            return res;
        }
        const double slope = g->dot(p);

        double t = 1.0;
        std::optional<double> f_new;
        Vector x_new;
        for (int k = 0; k < options.max_backtracks; ++k, t *= 0.5) {
            x_new = bounds.clamp(res.x + t * p);
            f_new = objective.value(x_new);
            ++res.evaluations;
            if (f_new && *f_new <= res.f + options.armijo * t * std::min(slope, 0.0)) {
                break;
            }
            f_new.reset();
        }
        ++res.iterations;
        if (!f_new) {
            if (!reset_used) {
                b = b0;
                reset_used = true;
                continue;
            }
            res.status = "line search failed";
            return res;
        }

        auto g_new = objective.gradient(x_new);
        if (!g_new) {
            res.status = "gradient undefined";
            return res;
        }
        const Vector s = x_new - res.x;
        const Vector y = *g_new - *g;
        const double df = res.f - *f_new;
        res.x = x_new;
        res.f = *f_new;
        g = std::move(g_new);

        if (s.norm() < options.step_tol || std::abs(df) < options.f_tol) {
            res.converged = true;
            res.status = s.norm() < options.step_tol ? "step below tolerance" : "objective change below tolerance";
            return res;
        }

        // Powell-damped BFGS update keeps the model positive definite.
        const Vector bs = b * s;
        const double sbs = s.dot(bs);
        if (sbs <= 0.0) {
            continue;
        }
        const double sy = s.dot(y);
        Vector r = y;
        if (sy < 0.2 * sbs) {
            const double theta = 0.8 * sbs / (sbs - sy);
            r = theta * y + (1.0 - theta) * bs;
        }
        b += r * r.transpose() / s.dot(r) - bs * bs.transpose() / sbs;
    }
    res.status = "iteration limit reached";
    return res;
}

std::optional<Vector> fd_gradient(const std::function<std::optional<double>(const Vector&)>& f, const Vector& x,
                                  const BoxBounds& bounds, double rel_step) {
    Vector grad(x.size());
    std::optional<double> fx;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel_step * std::max(std::abs(x[i]), 1.0);
        Vector xp = x;
        Vector xm = x;
        const bool up = x[i] + h <= bounds.upper[i];
        const bool down = x[i] - h >= bounds.lower[i];
        if (up) {
            xp[i] += h;
        }
        if (down) {
            xm[i] -= h;
        }
        if (!up || !down) {
            if (!fx) {
                fx = f(x);
                if (!fx) {
                    return std::nullopt;
                }
            }
        }
        const auto fp = up ? f(xp) : fx;
        const auto fm = down ? f(xm) : fx;
        if (!fp || !fm) {
            return std::nullopt;
        }
        const double span = (up ? h : 0.0) + (down ? h : 0.0);
        if (span == 0.0) {
            return std::nullopt;
        }
        grad[i] = (*fp - *fm) / span;
    }
    return grad;
}

std::optional<Matrix> fd_hessian(const std::function<std::optional<double>(const Vector&)>& f, const Vector& x,
                                 const BoxBounds& bounds, double rel_step) {
    const Eigen::Index n = x.size();
    Vector h(n);
    Vector center = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        h[i] = rel_step * std::max(std::abs(x[i]), 1.0);
        // Shift the stencil inside the box.
        center[i] = std::clamp(x[i], bounds.lower[i] + h[i], bounds.upper[i] - h[i]);
    }
    const auto f0 = f(center);
    if (!f0) {
        return std::nullopt;
    }
    Matrix hess(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            auto probe = [&](double si, double sj) -> std::optional<double> {
                Vector z = center;
                z[i] += si * h[i];
                z[j] += sj * h[j];
                return f(z);
            };
            double v = 0.0;
            if (i == j) {
                const auto fp = probe(0.5, 0.5);
                const auto fm = probe(-0.5, -0.5);
                if (!fp || !fm) {
                    return std::nullopt;
                }
                v = (*fp - 2.0 * *f0 + *fm) / (h[i] * h[i]);
            } else {
                const auto fpp = probe(1.0, 1.0);
                const auto fpm = probe(1.0, -1.0);
                const auto fmp = probe(-1.0, 1.0);
                const auto fmm = probe(-1.0, -1.0);
                if (!fpp || !fpm || !fmp || !fmm) {
                    return std::nullopt;
                }
                v = (*fpp - *fpm - *fmp + *fmm) / (4.0 * h[i] * h[j]);
            }
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return hess;
}

}  // namespace fbmreg
