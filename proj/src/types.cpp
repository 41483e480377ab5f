#include "fbmreg/types.hpp"

#include "fbmreg/errors.hpp"

#include <cmath>
#include <string>

namespace fbmreg {

void RstParams::validate() const {
    if (!std::isfinite(dt) || !std::isfinite(ds) || !std::isfinite(alpha) || !std::isfinite(dr)) {
        throw Error(ErrorCode::InvalidArgument, "RST parameters must be finite");
    }
    if (dr <= 0.0) {
        throw Error(ErrorCode::InvalidArgument, "scaling factor dr must be positive, got " + std::to_string(dr));
    }
}

void TextureParams::validate() const {
    if (!(sigma_ri >= 0.0) || !(sigma_ti >= 0.0) || !std::isfinite(sigma_ri) || !std::isfinite(sigma_ti)) {
        throw Error(ErrorCode::InvalidArgument, "texture STDs must be finite and non-negative");
    }
    if (!(hurst >= 0.0 && hurst <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "Hurst exponent must lie in [0, 1], got " + std::to_string(hurst));
    }
    if (!(std::abs(k_rt) <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "|k_rt| must not exceed 1, got " + std::to_string(k_rt));
    }
}

Vector8 FullParams::as_vector() const {
    Vector8 v;
    v << texture.sigma_ri, texture.sigma_ti, texture.hurst, texture.k_rt, rst.dt, rst.ds, rst.alpha, rst.dr;
    return v;
}

FullParams FullParams::from_vector(const Vector8& v) {
    return FullParams{TextureParams{v[0], v[1], v[2], v[3]}, RstParams{v[4], v[5], v[6], v[7]}};
}

void FullParams::validate() const {
    texture.validate();
    rst.validate();
}

std::string_view param_name(ParamIndex p) noexcept {
    switch (p) {
        case ParamIndex::SigmaRi: return "sigma_x_ri";
        case ParamIndex::SigmaTi: return "sigma_x_ti";
        case ParamIndex::Hurst: return "hurst";
        case ParamIndex::KRt: return "k_rt";
        case ParamIndex::Dt: return "dt";
        case ParamIndex::Ds: return "ds";
        case ParamIndex::Alpha: return "alpha";
        case ParamIndex::Dr: return "dr";
    }
    return "?";
}

Fragment::Fragment(Matrix pixels, double noise_var) : pixels_(std::move(pixels)), noise_var_(noise_var) {
    if (pixels_.rows() != pixels_.cols() || pixels_.rows() == 0) {
        throw Error(ErrorCode::InvalidArgument, "fragment must be a non-empty square grid");
    }
    if (pixels_.rows() % 2 == 0) {
        throw Error(ErrorCode::InvalidArgument,
                    "fragment size must be odd, got " + std::to_string(pixels_.rows()));
    }
    if (!pixels_.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "fragment pixels must be finite");
    }
    if (!(noise_var_ >= 0.0) || !std::isfinite(noise_var_)) {
        throw Error(ErrorCode::InvalidArgument, "noise variance must be finite and non-negative");
    }
}

Vector Fragment::stacked() const {
    return Eigen::Map<const Vector>(pixels_.data(), pixels_.size());
}

Fragment Fragment::center_crop(int size) const {
    if (size <= 0 || size % 2 == 0 || size > this->size()) {
        throw Error(ErrorCode::InvalidArgument, "crop size must be odd and fit inside the fragment");
    }
    const int offset = half() - (size - 1) / 2;
    return Fragment(pixels_.block(offset, offset, size, size), noise_var_);
}

void PairGeometry::validate() const {
    if (n_ri <= 0 || n_ti <= 0 || n_ri % 2 == 0 || n_ti % 2 == 0) {
        throw Error(ErrorCode::InvalidArgument, "fragment sizes must be odd and positive");
    }
}

}  // namespace fbmreg
