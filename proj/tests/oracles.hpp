#pragma once

// Test-only oracles, written independently of the library: adaptive Simpson
// quadrature, the Ei power series and plain bisection.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Stop at the requested tolerance or once the estimate is at rounding level.
  const double floor = 32.0 * std::numeric_limits<double>::epsilon() * std::fabs(left + right);
  if (depth <= 0 || std::fabs(delta) <= std::max(15.0 * tol, floor)) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson on [a, b] (finite), split into `pieces` equal panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-12, int pieces = 16) {
  double total = 0.0;
  const double h = (b - a) / pieces;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + i * h;
    const double hi = i + 1 == pieces ? b : lo + h;
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    total += simpson_rec(f, lo, hi, flo, fm, fhi, whole, tol / pieces, 40);
  }
  return total;
}

/// Simpson over consecutive breakpoints.
inline double simpson_pieces(const std::function<double(double)>& f, std::vector<double> pts,
                             double tol = 1e-12) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] > pts[i]) total += simpson(f, pts[i], pts[i + 1], tol);
  }
  return total;
}

/// Integral over [a, inf) on geometrically growing panels a + s*[0,1,10,...,1e8];
/// the integrand must decay fast enough for the remainder to be negligible.
inline double simpson_to_inf(const std::function<double(double)>& f, double a, double s,
                             double tol = 1e-13) {
  std::vector<double> pts{a, a + s};
  for (double w = 10.0; w <= 1e8; w *= 10.0) pts.push_back(a + w * s);
  return simpson_pieces(f, pts, tol);
}

/// CRPS integral of a CDF over [lo, hi], split at x and any extra points.
/// Adds the exact contribution of [x, lo] when x lies below lo.
inline double crps(const std::function<double(double)>& cdf, double x, double lo, double hi,
                   std::vector<double> extra = {}, double tol = 1e-12) {
  auto g = [&](double y) {
    const double d = cdf(y) - (y >= x ? 1.0 : 0.0);
    return d * d;
  };
  std::vector<double> pts{lo, hi};
  if (x > lo && x < hi) pts.push_back(x);
  for (double e : extra) {
    if (e > lo && e < hi) pts.push_back(e);
  }
  std::sort(pts.begin(), pts.end());
  double below = x < lo ? lo - x : 0.0;  // F = 0 there, indicator 1
  return below + simpson_pieces(g, pts, tol);
}

/// Ei(x) = C + ln|x| + sum_{k>=1} x^k / (k! k).
inline double ei_series(double x) {
  constexpr double kEuler = 0.57721566490153286060651209;
  double term = 1.0;
  double sum = 0.0;
  for (int k = 1; k < 400; ++k) {
    term *= x / k;
    const double add = term / k;
    sum += add;
    if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
  }
  return kEuler + std::log(std::fabs(x)) + sum;
}

/// Root of a nondecreasing f on [lo, hi] by bisection.
inline double bisect(const std::function<double(double)>& f, double target, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    if (f(m) < target) {
      lo = m;
    } else {
      hi = m;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
