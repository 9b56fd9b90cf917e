#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "windemos/dataio.hpp"
#include "windemos/distributions.hpp"
#include "windemos/forecast.hpp"

namespace windemos {

enum class ScaleLink { MeanLinear, SdLinear, VarLinear, MdLinear };
std::string_view to_string(ScaleLink l);
ScaleLink scale_link_from_string(std::string_view s);

enum class ObjectiveKind { MeanCrps, LogLikelihood };
std::string_view to_string(ObjectiveKind o);
/// Accepts "crps" and "logs".
ObjectiveKind objective_from_string(std::string_view s);

enum class Scope { Global, Local };
std::string_view to_string(Scope s);
Scope scope_from_string(std::string_view s);

/// Open interval the fitted GEV/TGEV shape is kept in.
inline constexpr double kShapeLower = -0.278;
inline constexpr double kShapeUpper = 1.0 / 3.0;
/// Floor applied to built scales (sigma, TN sigma^2, LN m and v).
inline constexpr double kScaleFloor = 1e-4;

/// Link-function coefficients.
///   TN:       mu = a0 + sum a_k fbar_k,        sigma^2 = b0 + b1 S^2
///   LN:       m  = alpha0 + sum alpha_k fbar_k, v = beta0 + beta1 S^2
///   GEV/TGEV: mu = gamma0 + sum gamma_k fbar_k, sigma by scale_link:
///     mean_linear s0 + s1 fbar, sd_linear s0 + s1 S,
///     var_linear sqrt(s0 + s1 S^2), md_linear s0 + s1 MD.
/// TN and LN always use var_linear.
struct EmosCoefficients {
  Family family = Family::Tgev;
  ScaleLink scale_link = ScaleLink::MeanLinear;
  double intercept = 0.0;
  std::vector<double> weights;
  double scale0 = 0.0;
  double scale1 = 0.0;
  double shape = 0.0;

  /// Throws DomainError when a constraint of the family is violated.
  void validate() const;
};

/// Scale link used when none is requested.
ScaleLink default_scale_link(Family f);

/// Throws NumericalError on non-finite parameters and DegenerateDistributionError
/// when the law has no usable mass above zero.
Predictive build_params(const EmosCoefficients& c, const EnsembleStats& stats);

struct TrainingCase {
  EnsembleStats stats;
  double obs = 0.0;
};

struct TrainingWindow {
  std::vector<TrainingCase> cases;
  int window_days = 0;
  Scope scope = Scope::Global;
  /// Station of a local window; empty for global ones.
  std::string station;
};

enum class InitialPoint {
  /// Regression start for TN/LN, fixed point for GEV/TGEV.
  Default,
  /// Start from FitConfig::warm_start when given, else Default.
  Previous,
};

struct FitConfig {
  ObjectiveKind objective = ObjectiveKind::MeanCrps;
  int max_iterations = 200;
  double rel_tol = 1e-8;
  double grad_tol = 1e-7;
  /// Unset means default_scale_link(family). TN and LN accept only var_linear.
  std::optional<ScaleLink> scale_link;
  InitialPoint initial_point = InitialPoint::Default;
  std::optional<EmosCoefficients> warm_start;
};

struct FitDiagnostics {
  int iterations = 0;
  int evaluations = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  bool converged = false;
  std::string message;
};

struct FitResult {
  EmosCoefficients coefficients;
  FitDiagnostics diagnostics;
};

/// Mean CRPS or mean log score of the window under the coefficients. Errors
/// from individual cases are rethrown as NumericalError naming the case.
double objective(const EmosCoefficients& c, const TrainingWindow& window, const FitConfig& config);

/// Number of free coefficients of a family with `groups` exchangeable groups.
std::size_t free_parameter_count(Family f, std::size_t groups);

/// Starting coefficients according to the config's initial-point policy.
EmosCoefficients initial_coefficients(const TrainingWindow& window, Family family,
                                      const FitConfig& config);

/// BFGS fit on transformed coefficients (squares for the nonnegative ones, a
/// logistic map for the shape). Throws FitError when the window is too small
/// or the objective is not finite at the start.
FitResult fit(const TrainingWindow& window, Family family, const FitConfig& config);

struct RollingConfig {
  int window_days = 30;
  Scope scope = Scope::Global;
  FitConfig fit;
};

/// One fit of the rolling harness.
struct FitRecord {
  std::int64_t day = 0;
  int lead_time_h = 0;
  std::string station;  // empty for global fits
  std::size_t training_cases = 0;
  /// "ok", "fallback" (fit failed, previous coefficients reused) or "failed".
  std::string status;
  std::string error;
  EmosCoefficients coefficients;
  FitDiagnostics diagnostics;
};

struct CalibratedCase {
  std::size_t case_index = 0;
  Predictive params;
  std::size_t fit_index = 0;
};

struct SkippedCase {
  std::size_t case_index = 0;
  std::string reason;
};

struct RollingResult {
  std::vector<CalibratedCase> cases;
  std::vector<FitRecord> fits;
  std::vector<SkippedCase> skipped;
};

/// First calendar day (days since the epoch) that is verified with an n-day window.
std::int64_t first_verification_day(const Dataset& data, int window_days);

/// For every verification day d >= first day + n, fits on days [d - n, d - 1]
/// (per lead time, pooled or per station) and builds that day's predictive laws.
RollingResult rolling_calibrate(const Dataset& data, Family family, const RollingConfig& config);

/// Training-period observations for the case: days [d - n, d - 1], same lead
/// time, all stations (global) or the case's station (local).
std::vector<double> training_observations(const Dataset& data, std::size_t case_index,
                                          int window_days, Scope scope);

/// Empirical law of the window's observations. Throws DomainError when empty.
EmpiricalEnsemble climatology_forecast(const TrainingWindow& window);

void to_json(nlohmann::json& j, const EmosCoefficients& c);
void from_json(const nlohmann::json& j, EmosCoefficients& c);
void to_json(nlohmann::json& j, const FitDiagnostics& d);

}  // namespace windemos
