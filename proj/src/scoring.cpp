#include "windemos/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "windemos/errors.hpp"
#include "windemos/special_functions.hpp"

namespace windemos {
namespace {

using special::std_normal_cdf;
using special::std_normal_pdf;

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kSqrt2 = 1.41421356237309504880;

// R below is summed as a power series when L0 is under this cutoff.
constexpr double kSeriesCutoff = 0.5;

double kernel_power_moment(double a, double upper, double shape, bool gumbel) {
  const double log_l = std::log(upper);
  const double e = gumbel ? -log_l : std::expm1(-shape * log_l) / shape;
  const double s = gumbel ? 0.0 : shape;
  return std::exp(a * log_l) * (a * e + 1.0) / (a * (a - s));
}

// R(L0) = integral over [0, L0] of k(u) (e^{-2u} - e^{-L0} e^{-u}) du.
double tgev_r_term(double l0, double shape) {
  const bool gumbel = is_gumbel(shape);
  if (l0 < kSeriesCutoff) {
    const double g0 = std::exp(-l0);
    double sum = 0.0;
    double coef = 1.0;  // (-1)^n / n!
    double two_n = 1.0;
    for (int n = 0; n < 80; ++n) {
      const double factor = n == 0 ? -std::expm1(-l0) : two_n - g0;
      const double term = coef * factor * kernel_power_moment(n + 1.0, l0, shape, gumbel);
      sum += term;
      if (n > 2 && std::fabs(term) <= 1e-18 * std::fabs(sum)) break;
      coef *= -1.0 / (n + 1.0);
      two_n *= 2.0;
    }
    return sum;
  }
  const double two_xi = gumbel ? 1.0 : std::exp(shape * kLn2);
  const double c_xi = gumbel ? kLn2 : std::expm1(shape * kLn2) / shape;
  const double g0 = std::exp(-l0);
  const double one_minus_g0_sq = -std::expm1(-2.0 * l0);
  return 0.5 * (two_xi * tgev_tail_integral(2.0 * l0, shape) + c_xi * one_minus_g0_sq) -
         g0 * tgev_tail_integral(l0, shape);
}

double crps_tn_impl(double mu, double sigma, double x) {
  const double a = mu / sigma;
  const double p = std_normal_cdf(a);
  const double z = (x - mu) / sigma;
  // 2 Phi(z) + p - 2 evaluated as p - 2 Phi(-z).
  const double bracket = z * p * (p - 2.0 * std_normal_cdf(-z)) + 2.0 * std_normal_pdf(z) * p -
                         std_normal_cdf(kSqrt2 * a) / std::sqrt(special::kPi);
  return sigma * bracket / (p * p);
}

}  // namespace

double crps_tn(const TruncNormal& p, double x) {
  return std::max(0.0, crps_tn_impl(p.location(), p.scale(), x));
}

double crps_ln(const LogNormal& p, double x) {
  const double mu = p.log_location();
  const double sigma = p.log_scale();
  const double m = std::exp(mu + 0.5 * sigma * sigma);
  double first = 0.0;
  double phi_shift = 0.0;
  if (x > 0.0) {
    const double w = (std::log(x) - mu) / sigma;
    first = x * (2.0 * std_normal_cdf(w) - 1.0);
    phi_shift = std_normal_cdf(w - sigma);
  }
  // Phi(sigma/sqrt2) - 1 = -Phi(-sigma/sqrt2).
  return std::max(0.0, first - 2.0 * m * (phi_shift - std_normal_cdf(-sigma / kSqrt2)));
}

double crps_gev(const Gev& p, double x) {
  const double xi = p.shape();
  if (xi >= 1.0) throw DomainError("crps_gev: shape must be < 1");
  const double sigma = p.scale();
  const double t = (x - p.location()) / sigma;
  const double l = p.neg_log_cdf(x);
  if (is_gumbel(xi)) {
    // Ei(ln G) with ln G = -L; for L below the Ei domain, Ei(-L) ~ C + ln L = C - t.
    const double ei = l < 1e-300 ? special::kEulerGamma - t : special::exp_integral_ei(-l);
    return std::max(0.0, sigma * (-t - 2.0 * ei + special::kEulerGamma - kLn2));
  }
  const double g = std::exp(-l);
  const double a = 1.0 - xi;
  const double value = (t + 1.0 / xi) * (2.0 * g - 1.0) -
                       (std::exp(xi * kLn2) * special::gamma_fn(a) -
                        2.0 * special::lower_inc_gamma(a, l)) /
                           xi;
  return std::max(0.0, sigma * value);
}

double crps_tgev(const Tgev& p, double x) {
  if (p.shape() >= 1.0) throw DomainError("crps_tgev: shape must be < 1");
  if (p.untruncated()) return crps_gev(p.parent(), x);
  // Quantile representation with u = -ln tau:
  //   CRPS = (x - mu)(2 G0(x) - 1) + 2 sigma [P(Lx)/(1 - G(0)) - R(L0)/(1 - G(0))^2],
  // where P is tgev_tail_integral and R is tgev_r_term. This is the closed form
  // regrouped so that both brackets stay accurate when 1 - G(0) is tiny.
  const double l0 = p.neg_log_g0();
  const double lx = std::min(p.parent().neg_log_cdf(x), l0);
  const double mass = p.mass_above_zero();
  const double g0x = cdf(p, x);
  const double value =
      (x - p.location()) * (2.0 * g0x - 1.0) +
      2.0 * p.scale() *
          (tgev_tail_integral(lx, p.shape()) / mass - tgev_r_term(l0, p.shape()) / (mass * mass));
  return std::max(0.0, value);
}

double crps(const Predictive& p, double x) {
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, TruncNormal>) return crps_tn(d, x);
        if constexpr (std::is_same_v<T, LogNormal>) return crps_ln(d, x);
        if constexpr (std::is_same_v<T, Gev>) return crps_gev(d, x);
        if constexpr (std::is_same_v<T, Tgev>) return crps_tgev(d, x);
      },
      p);
}

double crps_numeric(const Cdf& cdf, double x, double lo, double hi,
                    std::span<const double> breakpoints, double abs_tol) {
  return twcrps(cdf, x, kNoThreshold, lo, hi, breakpoints, abs_tol);
}

double crps_numeric(const Predictive& p, double x, double abs_tol) {
  return twcrps(p, x, kNoThreshold, abs_tol);
}

double crps_ensemble(std::span<const double> members, double x) {
  if (members.empty()) throw DomainError("crps_ensemble: no members");
  std::vector<double> s(members.begin(), members.end());
  std::sort(s.begin(), s.end());
  const double m = static_cast<double>(s.size());
  double abs_err = 0.0;
  double spread = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    abs_err += std::fabs(s[i] - x);
    spread += (2.0 * static_cast<double>(i + 1) - m - 1.0) * s[i];
  }
  return abs_err / m - spread / (m * m);
}

double crps(const EmpiricalEnsemble& e, double x) { return crps_ensemble(e.sorted(), x); }

double twcrps(const Cdf& cdf, double x, double r, double lo, double hi,
              std::span<const double> breakpoints, double abs_tol) {
  if (!std::isfinite(x)) throw DomainError("twcrps: observation must be finite");
  lo = std::min(lo, x);
  hi = std::max(hi, x);
  const double a = std::max(lo, r);
  if (a >= hi) return 0.0;
  std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
  cuts.push_back(x);
  auto integrand = [&cdf, x](double y) {
    const double d = cdf(y) - (y >= x ? 1.0 : 0.0);
    return d * d;
  };
  quad::Options opts;
  opts.abs_tol = abs_tol;
  opts.rel_tol = 1e-12;
  return quad::integrate_piecewise(integrand, a, hi, cuts, opts).value;
}

double twcrps(const Predictive& p, double x, double r, double abs_tol) {
  const auto [lo, hi] = effective_support(p);
  return twcrps([&p](double y) { return cdf(p, y); }, x, r, lo, hi, {}, abs_tol);
}

double twcrps(const EmpiricalEnsemble& e, double x, double r) {
  const auto s = e.sorted();
  const double m = static_cast<double>(s.size());
  // The integrand vanishes below min(s_1, x) and above max(s_M, x).
  const double start = std::max(r, std::min(s.front(), x));
  const double stop = std::max(s.back(), x);
  if (start >= stop) return 0.0;
  std::vector<double> pts;
  pts.reserve(s.size() + 3);
  pts.push_back(start);
  for (double v : s) {
    if (v > start && v < stop) pts.push_back(v);
  }
  if (x > start && x < stop) pts.push_back(x);
  pts.push_back(stop);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double left = pts[i];
    const double width = pts[i + 1] - left;
    if (width <= 0.0) continue;
    const double f = static_cast<double>(std::upper_bound(s.begin(), s.end(), left) - s.begin()) / m;
    const double d = f - (left >= x ? 1.0 : 0.0);
    total += d * d * width;
  }
  return total;
}

double log_score_from_density(double density) {
  if (!(density > 0.0)) return kLogScorePenalty;
  return std::min(-std::log(density), kLogScorePenalty);
}

double log_score(const Predictive& p, double x) { return log_score_from_density(pdf(p, x)); }

namespace {

void require_paired(std::span<const double> f, std::span<const double> o, const char* fn) {
  if (f.size() != o.size()) throw DomainError(std::string(fn) + ": length mismatch");
  if (f.empty()) throw DomainError(std::string(fn) + ": empty series");
}

}  // namespace

double mae(std::span<const double> forecasts, std::span<const double> observations) {
  require_paired(forecasts, observations, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) s += std::fabs(forecasts[i] - observations[i]);
  return s / static_cast<double>(forecasts.size());
}

double rmse(std::span<const double> forecasts, std::span<const double> observations) {
  require_paired(forecasts, observations, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double d = forecasts[i] - observations[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(forecasts.size()));
}

double skill_score(double mean_score, double mean_score_ref) {
  if (!(mean_score_ref > 0.0)) throw DomainError("skill_score: reference score must be positive");
  return 1.0 - mean_score / mean_score_ref;
}

}  // namespace windemos
