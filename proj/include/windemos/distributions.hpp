#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace windemos {

enum class Family { TruncNormal, LogNormal, Gev, Tgev };

std::string_view to_string(Family f);
/// Accepts "tn", "ln", "gev", "tgev" (case-sensitive).
Family family_from_string(std::string_view s);

/// Shapes with |xi| below this are evaluated with the Gumbel (xi = 0) formulas.
inline constexpr double kGumbelShapeCutoff = 1e-8;
/// TGEV laws with G(0) at or above 1 - this are rejected as degenerate.
inline constexpr double kTgevMinMassAboveZero = 1e-12;

inline bool is_gumbel(double shape) { return shape > -kGumbelShapeCutoff && shape < kGumbelShapeCutoff; }

/// Normal law N(location, scale^2) truncated from below at zero.
class TruncNormal {
 public:
  TruncNormal(double location, double scale);
  double location() const { return location_; }
  double scale() const { return scale_; }

 private:
  double location_;
  double scale_;
};

/// Log-normal law with log-location mu and log-scale sigma.
class LogNormal {
 public:
  LogNormal(double log_location, double log_scale);
  /// Parametrization by mean m > 0 and variance v > 0.
  static LogNormal from_moments(double mean, double variance);
  double log_location() const { return mu_; }
  double log_scale() const { return sigma_; }

 private:
  double mu_;
  double sigma_;
};

struct Moments {
  double mean;
  double variance;
};

class Gev {
 public:
  Gev(double location, double scale, double shape);
  double location() const { return location_; }
  double scale() const { return scale_; }
  double shape() const { return shape_; }

  /// -ln G(x); +inf below a finite lower endpoint, 0 above a finite upper one.
  double neg_log_cdf(double x) const;

 private:
  double location_;
  double scale_;
  double shape_;
};

/// GEV law left-truncated at zero. Construction rejects parameters that put
/// (numerically) all mass below zero.
class Tgev {
 public:
  Tgev(double location, double scale, double shape);
  double location() const { return parent_.location(); }
  double scale() const { return parent_.scale(); }
  double shape() const { return parent_.shape(); }
  const Gev& parent() const { return parent_; }

  /// G(0) of the parent GEV.
  double prob_below_zero() const { return g0_; }
  /// 1 - G(0), computed without cancellation.
  double mass_above_zero() const { return mass_above_; }
  /// -ln G(0); +inf when the parent support lies in the positive half-line.
  double neg_log_g0() const { return neg_log_g0_; }
  /// True when truncation is inactive (G(0) = 0 in double precision).
  bool untruncated() const { return g0_ == 0.0; }

 private:
  Gev parent_;
  double neg_log_g0_;
  double g0_;
  double mass_above_;
};

/// An ensemble or climatological sample used as a step-function predictive law.
class EmpiricalEnsemble {
 public:
  explicit EmpiricalEnsemble(std::vector<double> values);
  std::span<const double> sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

using Predictive = std::variant<TruncNormal, LogNormal, Gev, Tgev>;

Family family_of(const Predictive& p);

// Truncated normal.
double pdf(const TruncNormal& p, double x);
double cdf(const TruncNormal& p, double x);
double quantile(const TruncNormal& p, double y);
double mean(const TruncNormal& p);

// Log-normal.
double pdf(const LogNormal& p, double x);
double cdf(const LogNormal& p, double x);
double quantile(const LogNormal& p, double y);
double mean(const LogNormal& p);
Moments mean_var(const LogNormal& p);

// GEV. Quantile accepts y = 1 for negative shape (finite upper endpoint).
double pdf(const Gev& p, double x);
double cdf(const Gev& p, double x);
double quantile(const Gev& p, double y);
/// Throws DomainError for shape >= 1.
double mean(const Gev& p);
/// Probability the GEV assigns to negative values, G(0).
double prob_negative(const Gev& p);

// Truncated GEV.
double pdf(const Tgev& p, double x);
double cdf(const Tgev& p, double x);
double quantile(const Tgev& p, double y);
/// Throws DomainError for shape >= 1.
double mean(const Tgev& p);

/// Integral of k(u) e^{-u} over [0, L], where k(u) = (u^{-xi} - 1)/xi
/// (k(u) = -ln u for xi = 0). It is the building block of the TGEV mean and
/// CRPS; L may be +inf.
double tgev_tail_integral(double upper, double shape);

// Empirical ensembles.
/// Fraction of members <= x.
double cdf(const EmpiricalEnsemble& e, double x);
/// Fraction of members < x.
double cdf_left(const EmpiricalEnsemble& e, double x);
double mean(const EmpiricalEnsemble& e);
double median(const EmpiricalEnsemble& e);
/// Quantile with plotting positions i/(n+1), clamped to the sample range; with
/// y = 1/(n+1) and n/(n+1) it returns the sample minimum and maximum.
double quantile(const EmpiricalEnsemble& e, double y);

// Variant dispatch.
double pdf(const Predictive& p, double x);
double cdf(const Predictive& p, double x);
double quantile(const Predictive& p, double y);
double mean(const Predictive& p);
double median(const Predictive& p);

/// Interval holding all but ~1e-10 of the mass in each tail; used as the
/// integration domain for numerical scoring.
std::pair<double, double> effective_support(const Predictive& p, double tail = 1e-10);

/// n i.i.d. draws by the inverse-CDF transform.
std::vector<double> sample(const Predictive& p, std::uint64_t seed, std::size_t n);
/// n draws with replacement.
std::vector<double> sample(const EmpiricalEnsemble& e, std::uint64_t seed, std::size_t n);

}  // namespace windemos
