#pragma once

// Exact simulation of correlated fBm fragment pairs, the catalogue of
// benchmark test points and the signal-dependent noise model.

#include "fbmreg/fbm_model.hpp"
#include "fbmreg/types.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace fbmreg {

struct TestPoint {
    int id{0};
    FullParams params;
    PairGeometry geometry;
    double noise_std_ri{1.0};
    double noise_std_ti{1.0};
    std::string description;

    [[nodiscard]] NoiseVariances noise() const noexcept {
        return {noise_std_ri * noise_std_ri, noise_std_ti * noise_std_ti};
    }
};

inline constexpr int kNumTestPoints = 10;

/// Catalogue entry 1..10. Throws UnknownTestPoint otherwise.
[[nodiscard]] TestPoint test_point(int id);

/// sigma_n^2 = sigma_si^2 + I * sigma_sd^2.
struct NoiseModel {
    double sigma_si{0.0};
    double sigma_sd{0.0};
};

[[nodiscard]] double noise_variance_for_fragment(const NoiseModel& model, double mean_intensity);

/// Deterministic generator for a seed: the seed is scrambled with splitmix64
/// so that consecutive seeds give unrelated streams.
[[nodiscard]] std::mt19937_64 make_rng(std::uint64_t seed);

/// Holds the Cholesky factor of the noise-inclusive joint matrix so that many
/// pairs can be drawn for one parameter point.
class PairSimulator {
public:
    PairSimulator(const FullParams& params, PairGeometry geometry, NoiseVariances noise);

    [[nodiscard]] const PairGeometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] NoiseVariances noise() const noexcept { return noise_; }

    /// Stacked (RI then TI, column-major) sample L z.
    [[nodiscard]] Vector draw_stacked(std::mt19937_64& rng) const;

    /// Pair for a seed; offsets are added to every pixel of each fragment.
    [[nodiscard]] FragmentPair draw(std::uint64_t seed, double offset_ri = 0.0, double offset_ti = 0.0) const;

    [[nodiscard]] FragmentPair split(const Vector& stacked, double offset_ri = 0.0, double offset_ti = 0.0) const;

private:
    PairGeometry geometry_;
    NoiseVariances noise_;
    Matrix factor_;
};

[[nodiscard]] FragmentPair simulate_pair(const FullParams& params, PairGeometry geometry, NoiseVariances noise,
                                         std::uint64_t seed, double offset_ri = 0.0, double offset_ti = 0.0);

}  // namespace fbmreg
