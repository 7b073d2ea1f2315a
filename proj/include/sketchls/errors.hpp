#pragma once

#include <stdexcept>
#include <string>

namespace sketchls {

/// Shapes that do not fit together (m < n, s >= m, length mismatches).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A triangular factor with an exactly zero diagonal entry.
class SingularError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iteration hit its cap before reaching the requested tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double attained)
        : std::runtime_error(what), attained_(attained) {}
    double attained() const noexcept { return attained_; }

private:
    double attained_;
};

/// Invalid experiment or CLI configuration; `field` names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace sketchls
