#pragma once

#include <stdexcept>
#include <string>

namespace ldt {

/// Base error carrying the process exit code the CLI maps it to:
/// 1 = validation/usage, 2 = data, 3 = training.
class Error : public std::runtime_error {
public:
    Error(const std::string& msg, int exit_code)
        : std::runtime_error(msg), exit_code_(exit_code) {}

    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

/// Invalid configuration value (zero hidden size, empty search space, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg, 1) {}
};

/// Tensor or sequence dimensions do not line up.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("shape error: " + msg, 1) {}
};

/// Malformed, missing, or insufficient input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error("data error: " + msg, 2) {}
};

/// Numeric failure during training (non-finite gradients, diverged step).
class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& msg) : Error("training error: " + msg, 3) {}
};

/// API misuse: mismatched traces, label sets, incompatible inputs.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error("usage error: " + msg, 1) {}
};

/// Filesystem or stream failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io error: " + msg, 1) {}
};

} // namespace ldt
