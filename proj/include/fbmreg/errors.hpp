#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fbmreg {

enum class ErrorCode {
    InvalidArgument,
    DegenerateModel,
    NotPositiveDefinite,
    SingularSystem,
    AllStartsFailed,
    SingularFim,
    SingularCovariance,
    UnknownTestPoint,
    InsufficientOverlap,
    DegenerateScore,
    DegenerateFit,
    Io,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

    /// True for errors caused by bad user input rather than by the model.
    [[nodiscard]] bool is_usage_error() const noexcept {
        return code_ == ErrorCode::InvalidArgument || code_ == ErrorCode::UnknownTestPoint;
    }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DegenerateModel: return "DegenerateModel";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::AllStartsFailed: return "AllStartsFailed";
        case ErrorCode::SingularFim: return "SingularFim";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::UnknownTestPoint: return "UnknownTestPoint";
        case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
        case ErrorCode::DegenerateScore: return "DegenerateScore";
        case ErrorCode::DegenerateFit: return "DegenerateFit";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace fbmreg
