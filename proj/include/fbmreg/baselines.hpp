#pragma once

// Similarity-measure registration baselines: the reference is resampled by
// cubic-spline interpolation at the back-projected template lattice and NCC
// (maximized) or SSD (minimized) is optimized over the RST parameters.

#include "fbmreg/interpolation.hpp"
#include "fbmreg/optimizer.hpp"
#include "fbmreg/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace fbmreg {

enum class SimilarityMeasure { Ncc, Ssd };

[[nodiscard]] std::string_view to_string(SimilarityMeasure m) noexcept;

/// Reference values at the template lattice (column-major) and the mask of
/// lattice points whose back-projection falls inside the reference.
struct Resampled {
    Vector values;
    std::vector<char> valid;
    int valid_count{0};
};

inline constexpr double kMinOverlapFraction = 0.5;

/// Throws InsufficientOverlap if fewer than half of the points are valid.
[[nodiscard]] Resampled resample_reference(const FragmentInterpolator& reference, const RstParams& rst,
                                           int template_size);
[[nodiscard]] Resampled resample_reference(const Fragment& reference, const RstParams& rst, int template_size);

/// Pearson correlation over the valid mask. Throws DegenerateScore if
/// either masked signal is constant.
[[nodiscard]] double ncc_score(const FragmentPair& pair, const RstParams& rst);

/// Mean squared difference over the valid mask.
[[nodiscard]] double ssd_score(const FragmentPair& pair, const RstParams& rst);

[[nodiscard]] double ncc_from_resampled(const Resampled& r, const Fragment& tmpl);
[[nodiscard]] double ssd_from_resampled(const Resampled& r, const Fragment& tmpl);

struct BaselineOptions {
    SqpOptions sqp;
    double fd_rel_step{1e-5};
    double hessian_rel_step{1e-3};
    double dr_min{0.5};
    double dr_max{2.0};
    double tie_tolerance{1e-9};
};

struct BaselineStart {
    int index{0};
    RstParams rst_initial;
    bool failed{false};
    double score{0.0};
    int iterations{0};
    bool converged{false};
    std::string status;
};

struct SimilarityEstimate {
    SimilarityMeasure measure{SimilarityMeasure::Ncc};
    RstParams rst_hat;
    double score_at_opt{0.0};  ///< NCC or SSD value (not negated)
    int start_index{0};
    int iterations{0};
    bool converged{false};
    std::vector<BaselineStart> starts;
};

/// Nine-start optimization of the chosen measure. Throws AllStartsFailed.
[[nodiscard]] SimilarityEstimate estimate_baseline(const FragmentPair& pair, const RstParams& rst_initial,
                                                   SimilarityMeasure measure, const BaselineOptions& options = {});

}  // namespace fbmreg
