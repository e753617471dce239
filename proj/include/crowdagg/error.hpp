#pragma once

#include <stdexcept>
#include <string>

namespace crowdagg {

// Bad input file contents (syntax, unknown columns, malformed rows).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally well-formed input that violates a precondition
// (answer out of range, duplicate entry, empty matrix, ...).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration value or missing required key.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal invariant broke (e.g. a likelihood trace decreased). Always a bug.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace crowdagg
