#pragma once

#include <stdexcept>
#include <string>

namespace qising {

// Bad user-facing configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Request is valid but not feasible at desk scale, e.g. chain length over the
// state-vector cap (CLI exit code 3).
struct FeasibilityError : std::runtime_error {
    explicit FeasibilityError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem trouble (CLI exit code 4).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qising
