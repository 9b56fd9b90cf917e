#pragma once

#include <functional>
#include <span>

namespace windemos::quad {

struct Options {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  int max_subdivisions = 4000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

/// Globally adaptive Gauss-Kronrod (10/21) integration over a finite [a, b].
/// Throws NumericalError with the reached error estimate when the
/// subdivision budget is exhausted.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opts = {});

/// As `integrate`, but splits [a, b] at each breakpoint lying strictly inside.
Result integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, const Options& opts = {});

}  // namespace windemos::quad
