#pragma once

#include <stdexcept>
#include <string>

namespace risnoma {

/// Invalid or inconsistent configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A simulation invariant was broken (battery out of range, NaN in a network,
/// missing forward cache). Always a bug; the CLI maps this to exit code 3.
class InvariantViolation : public std::logic_error {
public:
    explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

/// Mismatched dimensions between cooperating objects.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace risnoma
