#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace windemos::opt {

struct BfgsOptions {
  int max_iterations = 200;
  /// Stop when the objective decreases by less than rel_tol * (|f| + rel_tol).
  double rel_tol = 1e-8;
  /// Stop when the largest gradient component falls below this.
  double grad_tol = 1e-7;
  /// Central-difference step is fd_step * max(1, |theta_i|).
  double fd_step = 1e-6;
};

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

using Objective = std::function<double(std::span<const double>)>;

/// Unconstrained quasi-Newton minimization with finite-difference gradients
/// and a backtracking Armijo line search. Non-finite objective values are
/// treated as infeasible and backtracked from. The returned point is the best
/// one evaluated; the caller checks that f(x0) is finite.
BfgsResult bfgs_minimize(const Objective& f, std::vector<double> x0, const BfgsOptions& opts = {});

/// Central-difference gradient (one-sided where a neighbour is non-finite).
std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double fx,
                                double step, int* evaluations = nullptr);

}  // namespace windemos::opt
