#pragma once

#include <stdexcept>
#include <string>

namespace myinet {

/// Wrong wiring: shape/channel mismatches, unknown model names, bad specs.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Input outside the mathematical domain of an operation (empty batch, ...).
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

/// Bad files or bad file contents; message carries the offending path.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace myinet
