#pragma once

#include <stdexcept>
#include <string>

namespace hamred {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError/UsageError -> 2, NumericError -> 3, IoError -> 4.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : UsageError {
    explicit DimensionError(const std::string& msg) : UsageError(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Carries the residual of the last fixed-point iterate.
struct IntegrationError : NumericError {
    double residual;
    IntegrationError(const std::string& msg, double res)
        : NumericError(msg + " (residual " + std::to_string(res) + ")"), residual(res) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hamred
