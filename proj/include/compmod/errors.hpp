#pragma once

#include <stdexcept>
#include <string>

namespace compmod {

// Error taxonomy mirrored by the CLI exit codes:
//   NumericError -> 2, IoError -> 3, CompatError -> 4, ConfigError -> 5.
// DimensionError / ContractError are programming-contract violations and
// surface as NumericError-grade failures when they escape to the CLI.

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CompatError : std::runtime_error {
    explicit CompatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace compmod
