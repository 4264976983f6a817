#pragma once

#include <stdexcept>
#include <string>

namespace stein {

/// Point lies on or outside the support of a density.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid or inconsistent configuration (shapes, keys, parameter ranges).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value produced during a forward pass or optimizer step.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& msg, long step = -1)
        : std::runtime_error(msg), step(step) {}
    long step;
};

/// Numerical inconsistency beyond round-off (e.g. negative discrepancy radicand).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; carries the 1-based line number where parsing failed.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(msg), line(line) {}
    std::size_t line;
};

}  // namespace stein
