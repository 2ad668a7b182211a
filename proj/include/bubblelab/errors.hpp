#pragma once

#include <stdexcept>
#include <string>

namespace bubblelab {

// Error categories map onto CLI exit codes: config 2, solver 3, residual 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ResidualError : std::runtime_error {
    explicit ResidualError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bubblelab
