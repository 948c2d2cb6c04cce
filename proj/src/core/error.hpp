#pragma once

#include <stdexcept>
#include <string>

namespace glupruner {

enum class ErrorCode {
    Io,
    Format,
    UnsupportedDtype,
    UnsupportedShape,
    Data,
    Dimension,
    Shape,
    Config,
    Constraint,
    EmptyCalibration,
};

const char* error_code_name(ErrorCode code);

// Every failure the library reports is one of these. The C API maps the
// code to a status value and keeps what() as the last error message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace glupruner
