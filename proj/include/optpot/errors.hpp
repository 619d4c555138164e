#pragma once

#include <stdexcept>
#include <string>

namespace optpot {

/// Precondition violations: bad sizes, mismatched grids, out-of-range parameters.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A linear solve did not reach the requested relative residual.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}

    [[nodiscard]] double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

/// The admissible set {nu <= mu <= mu_max, Psi(mu) <= 1} is empty.
class InfeasibleProblem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid configuration. The message names the offending field or line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace optpot
