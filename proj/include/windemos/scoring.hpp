#pragma once

#include <functional>
#include <limits>
#include <span>

#include "windemos/distributions.hpp"
#include "windemos/quadrature.hpp"

namespace windemos {

/// Log score assigned when the predictive density at the observation is zero
/// (or so small that -ln exceeds it).
inline constexpr double kLogScorePenalty = 35.0;

/// Threshold sentinel for twcrps meaning "no threshold": the weight is 1 everywhere.
inline constexpr double kNoThreshold = -std::numeric_limits<double>::infinity();

// Closed-form CRPS.
double crps_tn(const TruncNormal& p, double x);
double crps_ln(const LogNormal& p, double x);
/// Throws DomainError for shape >= 1.
double crps_gev(const Gev& p, double x);
/// Throws DomainError for shape >= 1.
double crps_tgev(const Tgev& p, double x);
double crps(const Predictive& p, double x);

using Cdf = std::function<double(double)>;

/// Quadrature of the CRPS integral over [lo, hi], which is widened to contain x.
/// Mass of the law outside [lo, hi] is assumed negligible. Discontinuities of a
/// step CDF should be passed as breakpoints.
double crps_numeric(const Cdf& cdf, double x, double lo, double hi,
                    std::span<const double> breakpoints = {}, double abs_tol = 1e-9);
/// Quadrature of the CRPS integral over the effective support of p.
double crps_numeric(const Predictive& p, double x, double abs_tol = 1e-9);

/// CRPS of the empirical law of the members; members need not be sorted.
double crps_ensemble(std::span<const double> members, double x);
double crps(const EmpiricalEnsemble& e, double x);

/// Threshold-weighted CRPS with weight 1{y >= r}, by quadrature over
/// [max(lo, r), hi]. With r = kNoThreshold it is crps_numeric.
double twcrps(const Cdf& cdf, double x, double r, double lo, double hi,
              std::span<const double> breakpoints = {}, double abs_tol = 1e-9);
double twcrps(const Predictive& p, double x, double r, double abs_tol = 1e-9);
/// Exact threshold-weighted CRPS of an empirical (step) law.
double twcrps(const EmpiricalEnsemble& e, double x, double r);

/// -ln(density), capped at kLogScorePenalty.
double log_score_from_density(double density);
double log_score(const Predictive& p, double x);

double mae(std::span<const double> forecasts, std::span<const double> observations);
double rmse(std::span<const double> forecasts, std::span<const double> observations);

/// 1 - score / reference; throws DomainError when reference is not positive.
double skill_score(double mean_score, double mean_score_ref);

}  // namespace windemos
