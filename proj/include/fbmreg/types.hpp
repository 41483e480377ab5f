#pragma once

// Domain types shared by every module: transformation and texture parameter
// bundles, the Fragment pixel grid and the small fixed-size Eigen aliases.

#include <Eigen/Dense>

#include <array>
#include <numbers>
#include <string_view>

namespace fbmreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;
using Vector8 = Eigen::Matrix<double, 8, 1>;
using Matrix8 = Eigen::Matrix<double, 8, 8>;

[[nodiscard]] constexpr double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
[[nodiscard]] constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Coordinate pair in a centered fragment frame: t is the vertical (row)
/// axis, s the horizontal (column) axis.
struct Point2 {
    double t{0.0};
    double s{0.0};
};

/// Rotation-scaling-translation parameters. alpha is in radians.
struct RstParams {
    double dt{0.0};
    double ds{0.0};
    double alpha{0.0};
    double dr{1.0};

    [[nodiscard]] Vector4 as_vector() const { return {dt, ds, alpha, dr}; }
    [[nodiscard]] static RstParams from_vector(const Vector4& v) { return {v[0], v[1], v[2], v[3]}; }

    /// Same vector with alpha converted to degrees (report/CLI units).
    [[nodiscard]] Vector4 as_report_vector() const { return {dt, ds, rad_to_deg(alpha), dr}; }

    /// Throws InvalidArgument unless dr > 0 and every field is finite.
    void validate() const;
};

struct TextureParams {
    double sigma_ri{1.0};
    double sigma_ti{1.0};
    double hurst{0.5};
    double k_rt{0.0};

    void validate() const;
};

/// Full parameter vector ordered (sigma_ri, sigma_ti, H, k_rt, dt, ds, alpha, dr).
struct FullParams {
    TextureParams texture;
    RstParams rst;

    [[nodiscard]] Vector8 as_vector() const;
    [[nodiscard]] static FullParams from_vector(const Vector8& v);
    void validate() const;
};

enum class ParamIndex : int { SigmaRi = 0, SigmaTi, Hurst, KRt, Dt, Ds, Alpha, Dr };

inline constexpr int kNumParams = 8;
inline constexpr int kNumRstParams = 4;
inline constexpr int kFirstRstParam = 4;

inline constexpr std::array<ParamIndex, kNumParams> kAllParams{
    ParamIndex::SigmaRi, ParamIndex::SigmaTi, ParamIndex::Hurst, ParamIndex::KRt,
    ParamIndex::Dt,      ParamIndex::Ds,      ParamIndex::Alpha, ParamIndex::Dr};

[[nodiscard]] std::string_view param_name(ParamIndex p) noexcept;
[[nodiscard]] constexpr int index_of(ParamIndex p) noexcept { return static_cast<int>(p); }
[[nodiscard]] constexpr bool is_rst(ParamIndex p) noexcept { return index_of(p) >= kFirstRstParam; }

/// Square, odd-sized pixel grid with a centered coordinate system and a known
/// noise variance. pixels()(i, j) holds y(t = i - half, s = j - half).
class Fragment {
public:
    Fragment() = default;
    Fragment(Matrix pixels, double noise_var);

    [[nodiscard]] int size() const noexcept { return static_cast<int>(pixels_.rows()); }
    [[nodiscard]] int half() const noexcept { return (size() - 1) / 2; }
    [[nodiscard]] const Matrix& pixels() const noexcept { return pixels_; }
    [[nodiscard]] double noise_var() const noexcept { return noise_var_; }

    /// Pixel value at centered coordinates (t, s).
    [[nodiscard]] double at(int t, int s) const { return pixels_(t + half(), s + half()); }
    [[nodiscard]] bool contains(int t, int s) const noexcept {
        return t >= -half() && t <= half() && s >= -half() && s <= half();
    }

    /// Column-major vectorization of the grid.
    [[nodiscard]] Vector stacked() const;

    /// Central size x size crop (size odd, not larger than this fragment).
    [[nodiscard]] Fragment center_crop(int size) const;

private:
    Matrix pixels_;
    double noise_var_{0.0};
};

/// Reference/template fragment pair, the input of every estimator.
struct FragmentPair {
    Fragment reference;
    Fragment tmpl;
};

struct PairGeometry {
    int n_ri{23};
    int n_ti{15};

    [[nodiscard]] int ri_count() const noexcept { return n_ri * n_ri; }
    [[nodiscard]] int ti_count() const noexcept { return n_ti * n_ti; }
    [[nodiscard]] int total() const noexcept { return ri_count() + ti_count(); }
    void validate() const;
};

struct NoiseVariances {
    double ri{1.0};
    double ti{1.0};
};

}  // namespace fbmreg
