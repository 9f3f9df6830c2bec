#pragma once

#include <stdexcept>
#include <string>

namespace msl {

/// Argument outside the domain of an operation (unknown atom, boundary face
/// where an interior one is required, non-homologous surface, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A chain whose coefficients leave {-1, 0, +1}.
class UnsupportedChainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Violated precondition of a construction (non-solution, non-first-variation, ...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Potential that does not have the symmetry a construction needs.
class SymmetryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace msl
