#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bmi {

enum class ErrorCode {
    DimensionMismatch,
    IndivisibleGrid,
    ZeroArea,
    ShapeMismatch,
    SingularProjection,
    NonFiniteState,
    TooSmall,
    InvalidArgument,
    Malformed,
    UnsupportedDepth,
    BadMagic,
    UnsupportedVersion,
    InvariantViolation,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library. `offset` is set for parse errors
/// that can be pinned to a byte position in the input.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::uint64_t> offset = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::uint64_t> offset() const noexcept { return offset_; }

private:
    ErrorCode code_;
    std::optional<std::uint64_t> offset_;
};

}  // namespace bmi
