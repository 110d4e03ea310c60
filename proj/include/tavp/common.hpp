#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tavp {

/// Error raised for incompatible tensor shapes or invalid dimension arguments.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised for invalid input values (non-finite boxes, bad ranges, ...).
class ValueError : public std::runtime_error {
public:
    explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised when a configuration violates a model/build invariant.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised when a forward op produces NaN/Inf, or autograd is misused.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised for file/IO problems (missing files, parse failures).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Scalar storage precision. Float64 is the verification mode (gradient
/// checks need the headroom); Float32 is the training mode. The mode is a
/// process-global tensor-context setting.
enum class Dtype : uint8_t { Float32 = 0, Float64 = 1 };

Dtype scalar_mode();
void set_scalar_mode(Dtype mode);

/// RAII guard that sets the scalar mode for a scope.
class ScalarModeGuard {
public:
    explicit ScalarModeGuard(Dtype mode) : saved_(scalar_mode()) { set_scalar_mode(mode); }
    ~ScalarModeGuard() { set_scalar_mode(saved_); }
    ScalarModeGuard(const ScalarModeGuard&) = delete;
    ScalarModeGuard& operator=(const ScalarModeGuard&) = delete;

private:
    Dtype saved_;
};

/// While a NoGradGuard is alive, ops do not record autograd nodes.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool saved_;
};

bool grad_enabled();

} // namespace tavp
