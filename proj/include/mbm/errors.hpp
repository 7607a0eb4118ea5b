#pragma once

#include <stdexcept>
#include <string>

namespace mbm {

/// Malformed or inconsistent configuration (CLI exit code 1).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mathematical domain violation: argument outside an open interval,
/// Hurst functional outside (1/2,1), admissibility bound violated (exit code 2).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A requested integral does not exist (non-integrable singularity at t = 0).
class DivergenceError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Quadrature non-convergence or factorization failure (exit code 3).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double estimated_error = 0.0)
      : std::runtime_error(what), estimated_error_(estimated_error) {}

  double estimated_error() const noexcept { return estimated_error_; }

 private:
  double estimated_error_;
};

}  // namespace mbm
