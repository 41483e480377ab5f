// Regenerates src/lilliefors_table.inc: Monte-Carlo quantiles of the
// Lilliefors statistic under the normal null.
//
//   gen_lilliefors_table [replications] > src/lilliefors_table.inc

#include "fbmreg/lilliefors.hpp"
#include "fbmreg/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 100000;
    constexpr std::array<int, 30> sizes{4,  5,   6,   7,   8,   9,   10,  12,  15,  20,  25,  30,  40,  50,  60,
                                        72, 80,  100, 120, 150, 180, 210, 250, 300, 400, 500, 600, 800, 1000, 2000};
    constexpr std::array<double, 5> alphas{0.20, 0.15, 0.10, 0.05, 0.01};

    std::printf("// Generated by tools/gen_lilliefors_table (%d null replications per size).\n", reps);
    std::printf("constexpr std::array<double, %zu> kLillieforsAlphas{", alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        std::printf("%s%.2f", a ? ", " : "", alphas[a]);
    }
    std::printf("};\nconstexpr std::array<int, %zu> kLillieforsSizes{", sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        std::printf("%s%d", i ? ", " : "", sizes[i]);
    }
    std::printf("};\nconstexpr std::array<std::array<double, %zu>, %zu> kLillieforsCritical{{\n", alphas.size(),
                sizes.size());

    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const int n = sizes[i];
        auto rng = fbmreg::make_rng(0x11111efULL + static_cast<std::uint64_t>(n));
        std::vector<double> stats(static_cast<std::size_t>(reps));
        std::vector<double> sample(static_cast<std::size_t>(n));
        for (auto& s : stats) {
            for (auto& v : sample) {
                v = normal(rng);
            }
            s = fbmreg::lilliefors_statistic(sample);
        }
        std::sort(stats.begin(), stats.end());
        std::printf("    {");
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const double pos = (1.0 - alphas[a]) * (reps - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const std::size_t hi = std::min(lo + 1, stats.size() - 1);
            const double q = stats[lo] + (pos - static_cast<double>(lo)) * (stats[hi] - stats[lo]);
            std::printf("%s%.6f", a ? ", " : "", q);
        }
        std::printf("},\n");
        std::fflush(stdout);
    }
    std::printf("}};\n");
    return 0;
}
