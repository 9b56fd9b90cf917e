#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace windemos {

/// Argument outside the mathematical domain of a function or distribution.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed (non-convergence, non-finite result).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter combination that does not define a usable predictive law.
class DegenerateDistributionError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Optimization could not produce coefficients; carries diagnostics.
class FitError : public NumericalError {
 public:
  FitError(const std::string& what, int iterations, double objective)
      : NumericalError(what), iterations_(iterations), objective_(objective) {}
  int iterations() const { return iterations_; }
  double objective() const { return objective_; }

 private:
  int iterations_;
  double objective_;
};

/// Input file could not be parsed; `lines()` lists 1-based offending lines.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::vector<std::size_t> lines)
      : std::runtime_error(what), lines_(std::move(lines)) {}
  const std::vector<std::size_t>& lines() const { return lines_; }

 private:
  std::vector<std::size_t> lines_;
};

/// Well-formed input that violates a data invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace windemos
