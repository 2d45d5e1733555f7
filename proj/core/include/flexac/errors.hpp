#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flexac {

enum class ErrorCode {
    // shape / argument errors
    DimMismatch,
    EmptyInput,
    InvalidArgument,
    LengthMismatch,
    LayerOutOfRange,
    // numeric
    DegenerateVector,
    RankDeficient,
    ZeroSteeringVector,
    ZeroResult,
    // file formats
    BadMagic,
    VersionUnsupported,
    MalformedHeader,
    TruncatedPayload,
    NonFinite,
    NotNormalized,
    Io,
    // pairing / model / metrics
    UnpairedSample,
    TokenOutOfRange,
    HookLayerOutOfRange,
    PositionMismatch,
    TooFewNouns,
};

/// Stable, human-readable name of an error code ("TruncatedPayload", ...).
std::string_view error_name(ErrorCode code) noexcept;

/// True for errors caused by numerics rather than by malformed input.
bool is_numeric_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_name(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace flexac
