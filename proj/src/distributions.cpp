#include "windemos/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "windemos/errors.hpp"
#include "windemos/random.hpp"
#include "windemos/special_functions.hpp"

namespace windemos {
namespace {

using special::std_normal_cdf;
using special::std_normal_pdf;
using special::std_normal_quantile;

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_scale(double scale, const char* what) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    std::ostringstream os;
    os << what << ": scale must be positive and finite, got " << scale;
    throw DomainError(os.str());
  }
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + ": parameter must be finite");
}

void require_open_unit(double y, const char* what) {
  if (!(y > 0.0 && y < 1.0)) {
    throw DomainError(std::string(what) + ": probability must lie in ]0,1[");
  }
}

// k(u) = (u^{-xi} - 1)/xi, the GEV quantile kernel in terms of u = -ln y.
double quantile_kernel(double u, double shape) {
  if (is_gumbel(shape)) return -std::log(u);
  return std::expm1(-shape * std::log(u)) / shape;
}

// Integral of k(u) u^{a-1} over [0, L].
double kernel_power_moment(double a, double upper, double shape) {
  const double log_l = std::log(upper);
  const double e = is_gumbel(shape) ? -log_l : std::expm1(-shape * log_l) / shape;
  const double s = is_gumbel(shape) ? 0.0 : shape;
  return std::exp(a * log_l) * (a * e + 1.0) / (a * (a - s));
}

constexpr double kTailSeriesCutoff = 0.5;
// Beyond this the remaining tail of P is below 1e-16 and P equals its limit.
constexpr double kTailSaturation = 40.0;

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::TruncNormal: return "tn";
    case Family::LogNormal: return "ln";
    case Family::Gev: return "gev";
    case Family::Tgev: return "tgev";
  }
  return "?";
}

Family family_from_string(std::string_view s) {
  if (s == "tn") return Family::TruncNormal;
  if (s == "ln") return Family::LogNormal;
  if (s == "gev") return Family::Gev;
  if (s == "tgev") return Family::Tgev;
  throw ConfigError("unknown family '" + std::string(s) + "' (expected tn, ln, gev or tgev)");
}

// ---------------------------------------------------------------------------
// Truncated normal

TruncNormal::TruncNormal(double location, double scale) : location_(location), scale_(scale) {
  require_finite(location, "TruncNormal");
  require_scale(scale, "TruncNormal");
  if (std_normal_cdf(location / scale) <= 0.0) {
    throw DegenerateDistributionError("TruncNormal: no mass above zero");
  }
}

double pdf(const TruncNormal& p, double x) {
  if (x < 0.0) return 0.0;
  const double z = (x - p.location()) / p.scale();
  return std_normal_pdf(z) / (p.scale() * std_normal_cdf(p.location() / p.scale()));
}

double cdf(const TruncNormal& p, double x) {
  if (x <= 0.0) return 0.0;
  const double a = p.location() / p.scale();
  const double z = (x - p.location()) / p.scale();
  const double mass = std_normal_cdf(a);
  const double v = z < 0.0 ? (std_normal_cdf(z) - std_normal_cdf(-a)) / mass
                           : 1.0 - std_normal_cdf(-z) / mass;
  return std::clamp(v, 0.0, 1.0);
}

double quantile(const TruncNormal& p, double y) {
  require_open_unit(y, "TruncNormal quantile");
  const double a = p.location() / p.scale();
  const double mass = std_normal_cdf(a);
  const double upper_tail = (1.0 - y) * mass;
  const double z = upper_tail < 0.5 ? -std_normal_quantile(upper_tail)
                                    : std_normal_quantile(std_normal_cdf(-a) + y * mass);
  return std::max(0.0, p.location() + p.scale() * z);
}

double mean(const TruncNormal& p) {
  const double a = p.location() / p.scale();
  return p.location() + p.scale() * std_normal_pdf(a) / std_normal_cdf(a);
}

// ---------------------------------------------------------------------------
// Log-normal

LogNormal::LogNormal(double log_location, double log_scale) : mu_(log_location), sigma_(log_scale) {
  require_finite(log_location, "LogNormal");
  require_scale(log_scale, "LogNormal");
}

LogNormal LogNormal::from_moments(double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0) || !std::isfinite(mean) || !std::isfinite(variance)) {
    throw DomainError("LogNormal::from_moments: mean and variance must be positive");
  }
  const double s2 = std::log1p(variance / (mean * mean));
  return LogNormal(std::log(mean) - 0.5 * s2, std::sqrt(s2));
}

double pdf(const LogNormal& p, double x) {
  if (x <= 0.0) return 0.0;
  const double z = (std::log(x) - p.log_location()) / p.log_scale();
  return std_normal_pdf(z) / (x * p.log_scale());
}

double cdf(const LogNormal& p, double x) {
  if (x <= 0.0) return 0.0;
  return std_normal_cdf((std::log(x) - p.log_location()) / p.log_scale());
}

double quantile(const LogNormal& p, double y) {
  require_open_unit(y, "LogNormal quantile");
  return std::exp(p.log_location() + p.log_scale() * std_normal_quantile(y));
}

double mean(const LogNormal& p) {
  return std::exp(p.log_location() + 0.5 * p.log_scale() * p.log_scale());
}

Moments mean_var(const LogNormal& p) {
  const double s2 = p.log_scale() * p.log_scale();
  return {std::exp(p.log_location() + 0.5 * s2),
          std::exp(2.0 * p.log_location() + s2) * std::expm1(s2)};
}

// ---------------------------------------------------------------------------
// GEV

Gev::Gev(double location, double scale, double shape)
    : location_(location), scale_(scale), shape_(shape) {
  require_finite(location, "Gev");
  require_finite(shape, "Gev");
  require_scale(scale, "Gev");
}

double Gev::neg_log_cdf(double x) const {
  const double t = (x - location_) / scale_;
  if (is_gumbel(shape_)) return std::exp(-t);
  const double w = shape_ * t;
  if (!(w > -1.0)) return shape_ > 0.0 ? kInf : 0.0;
  return std::exp(-std::log1p(w) / shape_);
}

double pdf(const Gev& p, double x) {
  const double l = p.neg_log_cdf(x);
  if (l == 0.0 || std::isinf(l)) return 0.0;
  const double s = is_gumbel(p.shape()) ? 0.0 : p.shape();
  // z^{-1/xi - 1} exp(-z^{-1/xi}) with z^{-1/xi} = -ln G(x).
  return std::exp((1.0 + s) * std::log(l) - l) / p.scale();
}

double cdf(const Gev& p, double x) { return std::exp(-p.neg_log_cdf(x)); }

double quantile(const Gev& p, double y) {
  if (y == 1.0 && p.shape() < 0.0 && !is_gumbel(p.shape())) {
    return p.location() - p.scale() / p.shape();
  }
  require_open_unit(y, "Gev quantile");
  return p.location() + p.scale() * quantile_kernel(-std::log(y), p.shape());
}

double mean(const Gev& p) {
  if (p.shape() >= 1.0) throw DomainError("Gev mean: infinite for shape >= 1");
  if (is_gumbel(p.shape())) return p.location() + p.scale() * special::kEulerGamma;
  return p.location() + p.scale() * special::gamma1pm1(-p.shape()) / p.shape();
}

double prob_negative(const Gev& p) { return cdf(p, 0.0); }

// ---------------------------------------------------------------------------
// Truncated GEV

Tgev::Tgev(double location, double scale, double shape) : parent_(location, scale, shape) {
  neg_log_g0_ = parent_.neg_log_cdf(0.0);
  g0_ = std::exp(-neg_log_g0_);
  mass_above_ = -std::expm1(-neg_log_g0_);
  if (!(mass_above_ > kTgevMinMassAboveZero)) {
    std::ostringstream os;
    os << "Tgev(" << location << ", " << scale << ", " << shape
       << "): G(0) >= 1 - 1e-12, no usable mass above zero";
    throw DegenerateDistributionError(os.str());
  }
}

double pdf(const Tgev& p, double x) {
  if (x < 0.0) return 0.0;
  if (p.untruncated()) return pdf(p.parent(), x);
  return pdf(p.parent(), x) / p.mass_above_zero();
}

double cdf(const Tgev& p, double x) {
  if (x < 0.0) return 0.0;
  if (p.untruncated()) return cdf(p.parent(), x);
  const double lx = p.parent().neg_log_cdf(x);
  if (std::isinf(lx)) return 0.0;
  // (G(x) - G(0)) / (1 - G(0)) with G = exp(-L).
  const double v = std::exp(-lx) * -std::expm1(lx - p.neg_log_g0()) / p.mass_above_zero();
  return std::clamp(v, 0.0, 1.0);
}

double quantile(const Tgev& p, double y) {
  require_open_unit(y, "Tgev quantile");
  if (p.untruncated()) return quantile(p.parent(), y);
  // tau(y) = (1 - G(0)) y + G(0) = 1 - (1 - G(0))(1 - y); u = -ln tau.
  const double u = -std::log1p(-p.mass_above_zero() * (1.0 - y));
  return std::max(0.0, p.location() + p.scale() * quantile_kernel(u, p.shape()));
}

double tgev_tail_integral(double upper, double shape) {
  if (upper < 0.0 || std::isnan(upper)) throw DomainError("tgev_tail_integral: upper < 0");
  if (upper == 0.0) return 0.0;
  const bool gumbel = is_gumbel(shape);
  if (upper > kTailSaturation) {
    return gumbel ? special::kEulerGamma : special::gamma1pm1(-shape) / shape;
  }
  if (upper < kTailSeriesCutoff) {
    // e^{-u} = sum (-u)^n/n!, integrated term by term against k(u).
    double sum = 0.0;
    double factorial_sign = 1.0;
    for (int n = 0; n < 80; ++n) {
      const double term = factorial_sign * kernel_power_moment(n + 1.0, upper, shape);
      sum += term;
      if (std::fabs(term) <= 1e-18 * std::fabs(sum)) break;
      factorial_sign *= -1.0 / (n + 1.0);
    }
    return sum;
  }
  if (gumbel) {
    return std::exp(-upper) * std::log(upper) - special::exp_integral_ei(-upper) +
           special::kEulerGamma;
  }
  // [Gamma_l(1-xi, L) - (1 - e^{-L})]/xi, regrouped as
  // [Gamma(1-xi) - 1]/xi - [Gamma_u(1-xi, L) - e^{-L}]/xi.
  return special::gamma1pm1(-shape) / shape -
         (special::upper_inc_gamma(1.0 - shape, upper) - std::exp(-upper)) / shape;
}

double mean(const Tgev& p) {
  if (p.shape() >= 1.0) throw DomainError("Tgev mean: infinite for shape >= 1");
  // Positive shape with support inside [0, inf): truncation is inactive.
  if (p.untruncated()) return mean(p.parent());
  // Remaining branches (shape != 0 with xi*mu - sigma <= 0, and shape = 0):
  //   mu + sigma * P(-ln G(0)) / (1 - G(0)),
  // where P is tgev_tail_integral; for shape != 0 this equals
  //   mu - sigma/xi + sigma Gamma_l(1-xi, -ln G(0)) / (xi (1 - G(0))),
  // and for shape = 0 it equals (mu + sigma (C - Ei(-exp(mu/sigma)))) / (1 - G(0)).
  return p.location() +
         p.scale() * tgev_tail_integral(p.neg_log_g0(), p.shape()) / p.mass_above_zero();
}

// ---------------------------------------------------------------------------
// Empirical ensembles

EmpiricalEnsemble::EmpiricalEnsemble(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw DomainError("EmpiricalEnsemble: no values");
  for (double v : sorted_) {
    if (!std::isfinite(v)) throw DomainError("EmpiricalEnsemble: non-finite value");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double cdf(const EmpiricalEnsemble& e, double x) {
  const auto s = e.sorted();
  return static_cast<double>(std::upper_bound(s.begin(), s.end(), x) - s.begin()) /
         static_cast<double>(s.size());
}

double cdf_left(const EmpiricalEnsemble& e, double x) {
  const auto s = e.sorted();
  return static_cast<double>(std::lower_bound(s.begin(), s.end(), x) - s.begin()) /
         static_cast<double>(s.size());
}

double mean(const EmpiricalEnsemble& e) {
  const auto s = e.sorted();
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

double median(const EmpiricalEnsemble& e) {
  const auto s = e.sorted();
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double quantile(const EmpiricalEnsemble& e, double y) {
  require_open_unit(y, "empirical quantile");
  const auto s = e.sorted();
  const double n = static_cast<double>(s.size());
  const double h = y * (n + 1.0);
  if (h <= 1.0) return s.front();
  if (h >= n) return s.back();
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  return s[lo - 1] + frac * (s[lo] - s[lo - 1]);
}

// ---------------------------------------------------------------------------
// Variant dispatch

Family family_of(const Predictive& p) {
  return std::visit(Overloaded{[](const TruncNormal&) { return Family::TruncNormal; },
                               [](const LogNormal&) { return Family::LogNormal; },
                               [](const Gev&) { return Family::Gev; },
                               [](const Tgev&) { return Family::Tgev; }},
                    p);
}

double pdf(const Predictive& p, double x) {
  return std::visit([x](const auto& d) { return pdf(d, x); }, p);
}
double cdf(const Predictive& p, double x) {
  return std::visit([x](const auto& d) { return cdf(d, x); }, p);
}
double quantile(const Predictive& p, double y) {
  return std::visit([y](const auto& d) { return quantile(d, y); }, p);
}
double mean(const Predictive& p) {
  return std::visit([](const auto& d) { return mean(d); }, p);
}
double median(const Predictive& p) { return quantile(p, 0.5); }

std::pair<double, double> effective_support(const Predictive& p, double tail) {
  const double hi = quantile(p, 1.0 - tail);
  if (std::holds_alternative<Gev>(p)) return {quantile(p, tail), hi};
  return {0.0, hi};
}

std::vector<double> sample(const Predictive& p, std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = quantile(p, rng.uniform());
  return out;
}

std::vector<double> sample(const EmpiricalEnsemble& e, std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  const auto s = e.sorted();
  std::vector<double> out(n);
  for (auto& v : out) v = s[rng.below(s.size())];
  return out;
}

}  // namespace windemos
