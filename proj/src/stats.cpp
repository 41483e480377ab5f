#include "fbmreg/stats.hpp"

#include "fbmreg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fbmreg {

double median(std::vector<double> values) {
    if (values.empty()) {
        throw Error(ErrorCode::InvalidArgument, "median of an empty list");
    }
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (n % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double mad(const std::vector<double>& values) {
    const double m = median(values);
    std::vector<double> dev;
    dev.reserve(values.size());
    for (double v : values) {
        dev.push_back(std::abs(v - m));
    }
    return median(std::move(dev));
}

RobustSummary robust_stats(const std::vector<Vector4>& estimates, const Vector4& truth) {
    if (estimates.size() < 3) {
        throw Error(ErrorCode::InvalidArgument, "robust statistics need at least three estimates");
    }
    RobustSummary out;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> col;
        col.reserve(estimates.size());
        for (const auto& e : estimates) {
            col.push_back(e[i]);
        }
        out.bias[i] = truth[i] - median(col);
        out.robust_std[i] = kMadToStd * mad(col);
    }
    return out;
}

}  // namespace fbmreg
