#pragma once

#include <stdexcept>
#include <string>

namespace superbunch {

// Domain errors (bad argument values for a mathematical function) and range
// errors (results that cannot be represented) use std::domain_error and
// std::range_error directly.

/// Caller broke an operation's precondition (bad sizes, grids, rates...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure (quadrature, optimizer) failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::string diagnostics)
        : std::runtime_error(what + " [" + diagnostics + "]"), diagnostics_(std::move(diagnostics)) {}

    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string diagnostics_;
};

/// Configuration could not be parsed or validated; `field` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw ContractViolation(message);
}

}  // namespace detail
}  // namespace superbunch
