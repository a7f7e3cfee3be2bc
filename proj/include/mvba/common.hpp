// Shared basic types and error categories.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mvba {

using NodeId = int;

// Invalid user-supplied parameters (CLI, config file, experiment specs).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when dissemination is asked to route around an isolated source.
// Callers terminate the session with the default value when they see this.
struct SourceFaultyError : std::runtime_error {
    explicit SourceFaultyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mvba
