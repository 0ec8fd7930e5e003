#pragma once

#include <stdexcept>
#include <string>

namespace lbm {

enum class ErrorCode {
    NonFinite,
    DomainError,
    DimensionMismatch,
    TooLarge,
    EmptyGroup,
    MeanOnBoundary,
    NotRegular,
    DegenerateResponsibilities,
    PerturbationOutOfBox,
    InvalidArgument,
    Config,
    Io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

   private:
    ErrorCode code_;
};

inline const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::EmptyGroup: return "EmptyGroup";
        case ErrorCode::MeanOnBoundary: return "MeanOnBoundary";
        case ErrorCode::NotRegular: return "NotRegular";
        case ErrorCode::DegenerateResponsibilities: return "DegenerateResponsibilities";
        case ErrorCode::PerturbationOutOfBox: return "PerturbationOutOfBox";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Config: return "ConfigError";
        case ErrorCode::Io: return "IoError";
    }
    return "Unknown";
}

}  // namespace lbm
