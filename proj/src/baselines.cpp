#include "fbmreg/baselines.hpp"

#include "fbmreg/errors.hpp"
#include "fbmreg/fbm_model.hpp"
#include "fbmreg/likelihood.hpp"

#include <cmath>
#include <limits>

namespace fbmreg {

std::string_view to_string(SimilarityMeasure m) noexcept {
    return m == SimilarityMeasure::Ncc ? "ncc" : "ssd";
}

Resampled resample_reference(const FragmentInterpolator& reference, const RstParams& rst, int template_size) {
    rst.validate();
    if (template_size <= 0 || template_size % 2 == 0) {
        throw Error(ErrorCode::InvalidArgument, "template size must be odd and positive");
    }
    const int h = (template_size - 1) / 2;
    const int count = template_size * template_size;
    Resampled out;
    out.values = Vector::Zero(count);
    out.valid.assign(static_cast<std::size_t>(count), 0);
    int k = 0;
    for (int v = -h; v <= h; ++v) {
        for (int u = -h; u <= h; ++u, ++k) {
            const Point2 back = rst_inverse_coords({static_cast<double>(u), static_cast<double>(v)}, rst);
            if (reference.inside(back.t, back.s)) {
                out.values[k] = reference.at(back.t, back.s);
                out.valid[k] = 1;
                ++out.valid_count;
            }
        }
    }
    if (out.valid_count < kMinOverlapFraction * count) {
        throw Error(ErrorCode::InsufficientOverlap, std::to_string(out.valid_count) + " of " +
                                                        std::to_string(count) +
                                                        " template points map inside the reference");
    }
    return out;
}

Resampled resample_reference(const Fragment& reference, const RstParams& rst, int template_size) {
    return resample_reference(FragmentInterpolator(reference), rst, template_size);
}

double ncc_from_resampled(const Resampled& r, const Fragment& tmpl) {
    const Vector y = tmpl.stacked();
    double ma = 0.0;
    double mb = 0.0;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        if (r.valid[k]) {
            ma += r.values[k];
            mb += y[k];
        }
    }
    ma /= r.valid_count;
    mb /= r.valid_count;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        if (r.valid[k]) {
            const double a = r.values[k] - ma;
            const double b = y[k] - mb;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) {
        throw Error(ErrorCode::DegenerateScore, "NCC is undefined for a constant signal");
    }
    return sab / std::sqrt(saa * sbb);
}

double ssd_from_resampled(const Resampled& r, const Fragment& tmpl) {
    const Vector y = tmpl.stacked();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        if (r.valid[k]) {
            const double d = r.values[k] - y[k];
            acc += d * d;
        }
    }
    return acc / r.valid_count;
}

double ncc_score(const FragmentPair& pair, const RstParams& rst) {
    return ncc_from_resampled(resample_reference(pair.reference, rst, pair.tmpl.size()), pair.tmpl);
}

double ssd_score(const FragmentPair& pair, const RstParams& rst) {
    return ssd_from_resampled(resample_reference(pair.reference, rst, pair.tmpl.size()), pair.tmpl);
}

SimilarityEstimate estimate_baseline(const FragmentPair& pair, const RstParams& rst_initial,
                                     SimilarityMeasure measure, const BaselineOptions& options) {
    rst_initial.validate();
    const FragmentInterpolator interp(pair.reference);
    const int n_tpl = pair.tmpl.size();
    const double sign = measure == SimilarityMeasure::Ncc ? -1.0 : 1.0;

    const double inf = std::numeric_limits<double>::infinity();
    BoxBounds bounds;
    bounds.lower = Vector(kNumRstParams);
    bounds.upper = Vector(kNumRstParams);
    bounds.lower << -inf, -inf, -inf, options.dr_min;
    bounds.upper << inf, inf, inf, options.dr_max;

    auto value = [&](const Vector& x) -> std::optional<double> {
        try {
            const Resampled r = resample_reference(interp, RstParams::from_vector(x), n_tpl);
            const double s = measure == SimilarityMeasure::Ncc ? ncc_from_resampled(r, pair.tmpl)
                                                               : ssd_from_resampled(r, pair.tmpl);
            return sign * s;
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    Objective objective;
    objective.value = value;
    objective.gradient = [&](const Vector& x) { return fd_gradient(value, x, bounds, options.fd_rel_step); };

    const Vector x_init = rst_initial.as_vector();
    Matrix hessian0 = Matrix::Identity(kNumRstParams, kNumRstParams);
    if (const auto h = fd_hessian(value, x_init, bounds, options.hessian_rel_step); h && h->allFinite()) {
        hessian0 = *h;
    }

    const auto starts = multistart_grid(rst_initial);
    SimilarityEstimate best;
    best.measure = measure;
    bool have_best = false;
    double best_f = 0.0;
    for (int i = 0; i < kNumStarts; ++i) {
        BaselineStart diag;
        diag.index = i;
        diag.rst_initial = starts[i];
        const SqpResult r = minimize_box_sqp(objective, starts[i].as_vector(), bounds, hessian0, options.sqp);
        diag.failed = r.failed;
        diag.iterations = r.iterations;
        diag.converged = r.converged;
        diag.status = r.status;
        diag.score = r.failed ? std::numeric_limits<double>::quiet_NaN() : sign * r.f;
        if (!r.failed && std::isfinite(r.f) && (!have_best || r.f < best_f - options.tie_tolerance)) {
            have_best = true;
            best_f = r.f;
            best.rst_hat = RstParams::from_vector(r.x);
            best.score_at_opt = sign * r.f;
            best.start_index = i;
            best.iterations = r.iterations;
            best.converged = r.converged;
        }
        best.starts.push_back(std::move(diag));
    }
    if (!have_best) {
        throw Error(ErrorCode::AllStartsFailed, "every " + std::string(to_string(measure)) + " start failed");
    }
    return best;
}

}  // namespace fbmreg
