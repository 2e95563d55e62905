// error.hpp: exception type shared by all qdf modules

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qdf {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    StepSizeUnderflow,
    NonPhysicalState,
    NotConverged,
    ZeroEmission,
    UnsortedInput,
    WindowOverlap,
    GridTooCoarse,
    NonConvergence,
    IllConditioned,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace qdf
