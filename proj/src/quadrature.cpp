#include "windemos/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "windemos/errors.hpp"

namespace windemos::quad {
namespace {

// Kronrod 21-point abscissae (odd indices are the Gauss 10-point nodes).
constexpr std::array<double, 11> kXgk = {
    0.000000000000000000000000000000000e+00, 1.488743389816312108848260011297200e-01,
    2.943928627014601981311266031038656e-01, 4.333953941292471907992659431657842e-01,
    5.627571346686046833390000992726941e-01, 6.794095682990244062343273651148736e-01,
    7.808177265864168970637175783450424e-01, 8.650633666889845107320966884234930e-01,
    9.301574913557082260012071800595083e-01, 9.739065285171717200779640120844521e-01,
    9.956571630258080807355272806890028e-01};
constexpr std::array<double, 11> kWgk = {
    1.494455540029169056649364683898212e-01, 1.477391049013384913748415159720680e-01,
    1.427759385770600807970942731387171e-01, 1.347092173114733259280540017717068e-01,
    1.234919762620658510779581098310742e-01, 1.093871588022976418992105903258050e-01,
    9.312545458369760553506546508336634e-02, 7.503967481091995276704314091619001e-02,
    5.475589657435199603138130024458018e-02, 3.255816230796472747881897245938976e-02,
    1.169463886737187427806439606219205e-02};
// Gauss 10-point weights, paired with kXgk[1], kXgk[3], ..., kXgk[9].
constexpr std::array<double, 5> kWg = {
    2.955242247147528701738929946513383e-01, 2.692667193099963550912269215694694e-01,
    2.190863625159820439955349342281632e-01, 1.494513491505805931457763396576973e-01,
    6.667134430868813759356880989333179e-02};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = kWgk[0] * fc;
  double gauss = 0.0;
  for (std::size_t j = 1; j < kXgk.size(); ++j) {
    const double dx = half * kXgk[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  const double value = kronrod * half;
  const double error = std::fabs((kronrod - gauss) * half);
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "quadrature: non-finite integrand on [" << a << ", " << b << "]";
    throw NumericalError(os.str());
  }
  return {a, b, value, error};
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opts) {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("quadrature: interval bounds must be finite");
  }
  if (a == b) return {};
  if (b < a) {
    Result r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }

  std::priority_queue<Segment> heap;
  Segment first = gauss_kronrod(f, a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int subdivisions = 0;

  // Segments too narrow to bisect further are retired with their error.
  double retired_err = 0.0;
  while (total_err + retired_err > std::max(opts.abs_tol, opts.rel_tol * std::fabs(total))) {
    if (heap.empty()) break;
    if (subdivisions >= opts.max_subdivisions) {
      std::ostringstream os;
      os << "quadrature did not converge on [" << a << ", " << b << "]: estimate " << total
         << ", error " << total_err + retired_err << " after " << subdivisions
         << " subdivisions (tolerance " << opts.abs_tol << ")";
      throw NumericalError(os.str());
    }
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) ||
        (worst.b - worst.a) < 1e-15 * std::max(1.0, std::fabs(mid))) {
      total_err -= worst.error;
      retired_err += worst.error;
      continue;
    }
    Segment left = gauss_kronrod(f, worst.a, mid);
    Segment right = gauss_kronrod(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }

  // Re-sum to shed the drift accumulated by incremental updates.
  double value = 0.0;
  double error = retired_err;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return {value, error, subdivisions};
}

Result integrate_piecewise(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, const Options& opts) {
  std::vector<double> cuts{a};
  for (double p : breakpoints) {
    if (p > a && p < b) cuts.push_back(p);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  Options piece = opts;
  piece.abs_tol = opts.abs_tol / static_cast<double>(cuts.size() - 1);
  Result total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Result r = integrate(f, cuts[i], cuts[i + 1], piece);
    total.value += r.value;
    total.error += r.error;
    total.subdivisions += r.subdivisions;
  }
  return total;
}

}  // namespace windemos::quad
