#pragma once

#include <stdexcept>
#include <string>

namespace reorient {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI's one-line error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("io", what) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error("format", what) {}
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

struct GimbalLockError : Error {
    explicit GimbalLockError(const std::string& what) : Error("gimbal_lock", what) {}
};

struct DegenerateInputError : Error {
    explicit DegenerateInputError(const std::string& what) : Error("degenerate_input", what) {}
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

struct DivergenceError : Error {
    DivergenceError(const std::string& what, int epoch_or_step)
        : Error("divergence", what), at_(epoch_or_step) {}

    /// Epoch (training) or iteration (registration) at which divergence was detected.
    int at() const noexcept { return at_; }

private:
    int at_;
};

}  // namespace reorient
