#include "flexac/errors.hpp"

namespace flexac {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::LayerOutOfRange: return "LayerOutOfRange";
        case ErrorCode::DegenerateVector: return "DegenerateVector";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::ZeroSteeringVector: return "ZeroSteeringVector";
        case ErrorCode::ZeroResult: return "ZeroResult";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::VersionUnsupported: return "VersionUnsupported";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::NotNormalized: return "NotNormalized";
        case ErrorCode::Io: return "Io";
        case ErrorCode::UnpairedSample: return "UnpairedSample";
        case ErrorCode::TokenOutOfRange: return "TokenOutOfRange";
        case ErrorCode::HookLayerOutOfRange: return "HookLayerOutOfRange";
        case ErrorCode::PositionMismatch: return "PositionMismatch";
        case ErrorCode::TooFewNouns: return "TooFewNouns";
    }
    return "Unknown";
}

bool is_numeric_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DegenerateVector:
        case ErrorCode::RankDeficient:
        case ErrorCode::ZeroSteeringVector:
        case ErrorCode::ZeroResult:
            return true;
        default:
            return false;
    }
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

void fail(ErrorCode code, const std::string& detail) {
    throw Error(code, detail);
}

}  // namespace flexac
