#include "windemos/optimize.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace windemos::opt {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double fx,
                                double step, int* evaluations) {
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::fabs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    if (evaluations) *evaluations += 2;
    const bool ok_p = std::isfinite(fp);
    const bool ok_m = std::isfinite(fm);
    if (ok_p && ok_m) {
      g[i] = (fp - fm) / (2.0 * h);
    } else if (ok_p) {
      g[i] = (fp - fx) / h;
    } else if (ok_m) {
      g[i] = (fx - fm) / h;
    }
  }
  return g;
}

BfgsResult bfgs_minimize(const Objective& f, std::vector<double> x0, const BfgsOptions& opts) {
  BfgsResult res;
  const auto n = static_cast<Eigen::Index>(x0.size());
  std::vector<double> x = std::move(x0);
  double fx = f(x);
  res.evaluations = 1;
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.message = "objective is not finite at the initial point";
    return res;
  }
  Eigen::VectorXd g = to_eigen(fd_gradient(f, x, fx, opts.fd_step, &res.evaluations));
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool h_is_identity = true;
  bool scaled = false;
  std::vector<double> trial(x.size());

  while (res.iterations < opts.max_iterations) {
    if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      res.message = "gradient below tolerance";
      break;
    }
    Eigen::VectorXd d = -h * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      h.setIdentity();
      h_is_identity = true;
      d = -g;
      slope = g.dot(d);
    }
    double alpha = 1.0;
    if (h_is_identity) alpha = std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>());

    bool accepted = false;
    double f_new = fx;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) trial[i] = x[i] + alpha * d[i];
      f_new = f(trial);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= fx + kArmijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!h_is_identity) {
        // Curvature model went stale; retry along steepest descent.
        h.setIdentity();
        h_is_identity = true;
        scaled = false;
        continue;
      }
      res.converged = true;
      res.message = "no further descent along the search direction";
      break;
    }

    const Eigen::VectorXd s = alpha * d;
    x = trial;
    const double f_old = fx;
    fx = f_new;
    const Eigen::VectorXd g_new = to_eigen(fd_gradient(f, x, fx, opts.fd_step, &res.evaluations));
    const Eigen::VectorXd y = g_new - g;
    g = g_new;
    ++res.iterations;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h = (sy / y.squaredNorm()) * Eigen::MatrixXd::Identity(n, n);
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h * y;
      const double yhy = y.dot(hy);
      h += ((1.0 + rho * yhy) * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
      h_is_identity = false;
    }

    if (std::fabs(f_old - fx) < opts.rel_tol * (std::fabs(fx) + opts.rel_tol)) {
      res.converged = true;
      res.message = "relative objective change below tolerance";
      break;
    }
  }
  if (res.message.empty()) res.message = "iteration limit reached";
  res.x = std::move(x);
  res.value = fx;
  return res;
}

}  // namespace windemos::opt
