#pragma once

#include <stdexcept>
#include <string>

namespace ringmark {

// Exit-code mapping used by the CLI: config errors -> 2,
// divergence/verification refusal -> 3, I/O -> 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : ConfigError {
    explicit DimensionError(const std::string& msg) : ConfigError(msg) {}
};

struct SymmetryError : std::runtime_error {
    explicit SymmetryError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FingerprintMismatch : std::runtime_error {
    explicit FingerprintMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ringmark
