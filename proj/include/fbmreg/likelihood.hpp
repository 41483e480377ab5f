#pragma once

// Log-likelihood of a fragment pair under the joint fBm model, with the
// unknown central-pixel values eliminated in closed form, and the
// multi-start maximum-likelihood estimator built on it.

#include "fbmreg/fbm_model.hpp"
#include "fbmreg/optimizer.hpp"
#include "fbmreg/types.hpp"

#include <Eigen/Cholesky>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace fbmreg {

struct CentralValues {
    double x_ri0{0.0};
    double x_ti0{0.0};
};

struct LikelihoodEval {
    double log_lf{0.0};
    CentralValues central;
    FullParams params;
};

/// Generalized least-squares estimate of the two central values given the
/// stacked sample (RI then TI) and a positive-definite joint matrix.
[[nodiscard]] CentralValues estimate_central_values(const Vector& delta_y, const JointCorrelation& r_sigma);

/// Log-likelihood (constant dropped) at params, using the fragments' own
/// noise variances.
[[nodiscard]] LikelihoodEval log_likelihood(const FragmentPair& pair, const FullParams& params);

/// Stacks RI then TI samples, each column-major.
[[nodiscard]] Vector stack_pair(const FragmentPair& pair);

/// Repeated log-likelihood evaluations for one pair. Keeps a one-entry cache
/// so that a gradient request right after a value request at the same point
/// reuses the factorization. Not safe for concurrent use; create one per thread.
class LikelihoodFunction {
public:
    LikelihoodFunction(const FragmentPair& pair, NoiseVariances noise);

    struct Result {
        double log_lf{0.0};
        CentralValues central;
        std::optional<Vector8> gradient;  ///< d log_lf / d theta
    };

    /// Throws NotPositiveDefinite or SingularSystem.
    [[nodiscard]] Result evaluate(const FullParams& params, bool with_gradient);

    [[nodiscard]] const CorrelationModel& model() const noexcept { return model_; }
    [[nodiscard]] NoiseVariances noise() const noexcept { return noise_; }
    [[nodiscard]] const Vector& sample() const noexcept { return y_; }

private:
    struct Factorization {
        Vector8 theta;
        Eigen::LLT<Matrix> llt;
        Vector residual_white;  ///< L^-1 (Y - E x0)
        CentralValues central;
        double log_lf{0.0};
    };

    Factorization factorize(const FullParams& params, const ModelBlocks& blocks) const;

    CorrelationModel model_;
    NoiseVariances noise_;
    Vector y_;
    std::optional<Factorization> cache_;
};

/// Initial texture estimate: increment STDs of each fragment, H = 0.5 and the
/// sample correlation over the nearest-integer overlap implied by rst.
[[nodiscard]] TextureParams initial_texture_guess(const FragmentPair& pair, const RstParams& rst);

/// Population STD of unit-lag increments pooled over both directions.
[[nodiscard]] double increment_std(const Fragment& fragment);

/// Pearson correlation between template pixels and the reference pixels
/// nearest to their back-projection; 0 when undefined.
[[nodiscard]] double overlap_correlation(const FragmentPair& pair, const RstParams& rst);

enum class GradientMode { Analytic, FiniteDifference };

struct MlOptions {
    SqpOptions sqp;
    GradientMode gradient{GradientMode::Analytic};
    double fd_rel_step{1e-5};
    double dr_min{0.5};
    double dr_max{2.0};
    double sigma_floor{1e-6};
    double k_init_limit{0.99};
    double min_noise_var{1e-6};  ///< noise variances are floored here to keep R positive definite
    double tie_tolerance{1e-9};
    std::optional<TextureParams> texture_initial;  ///< overrides initial_texture_guess
};

struct StartDiagnostics {
    int index{0};
    RstParams rst_initial;
    bool failed{false};
    double log_lf{0.0};
    int iterations{0};
    bool converged{false};
    std::string status;
};

struct MlEstimate {
    FullParams params_hat;
    CentralValues central;
    double log_lf_at_opt{0.0};
    int start_index{0};
    int iterations{0};
    bool converged{false};
    std::vector<StartDiagnostics> starts;
};

inline constexpr int kNumStarts = 9;

/// Nine starts: rst with its translation shifted by {-1, 0, 1} in each axis.
/// Start 0 is the unshifted guess.
[[nodiscard]] std::array<RstParams, kNumStarts> multistart_grid(const RstParams& rst);

/// Parameter box used by the ML estimator.
[[nodiscard]] BoxBounds ml_bounds(const MlOptions& options);

/// Throws AllStartsFailed if no start produced a finite optimum.
[[nodiscard]] MlEstimate estimate_ml(const FragmentPair& pair, const RstParams& rst_initial,
                                     const MlOptions& options = {});

}  // namespace fbmreg
