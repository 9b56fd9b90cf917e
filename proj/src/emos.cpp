#include "windemos/emos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "windemos/errors.hpp"
#include "windemos/optimize.hpp"
#include "windemos/scoring.hpp"

namespace windemos {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// A coefficient started at exactly zero sits on a stationary point of its
// square-root parametrization, so it is nudged to (1e-2)^2.
constexpr double kZeroStartRoot = 1e-2;
constexpr double kMaxLogit = 30.0;

bool has_shape(Family f) { return f == Family::Gev || f == Family::Tgev; }

double shape_from_logit(double eta) {
  eta = std::clamp(eta, -kMaxLogit, kMaxLogit);
  return kShapeLower + (kShapeUpper - kShapeLower) / (1.0 + std::exp(-eta));
}

double logit_from_shape(double xi) {
  const double u = (xi - kShapeLower) / (kShapeUpper - kShapeLower);
  return std::log(u / (1.0 - u));
}

double root_of(double c) { return c > 0.0 ? std::sqrt(c) : kZeroStartRoot; }

// Transformed vector layout: [intercept, weights..., scale0, scale1, (shape)].
// TN/LN weights and all scale coefficients enter as squares.
std::vector<double> to_theta(const EmosCoefficients& c) {
  std::vector<double> th;
  th.push_back(c.intercept);
  const bool square_weights = !has_shape(c.family);
  for (double w : c.weights) th.push_back(square_weights ? root_of(w) : w);
  th.push_back(root_of(c.scale0));
  th.push_back(root_of(c.scale1));
  if (has_shape(c.family)) th.push_back(logit_from_shape(c.shape));
  return th;
}

void from_theta(std::span<const double> th, EmosCoefficients& c) {
  const bool square_weights = !has_shape(c.family);
  std::size_t i = 0;
  c.intercept = th[i++];
  for (double& w : c.weights) {
    w = square_weights ? th[i] * th[i] : th[i];
    ++i;
  }
  c.scale0 = th[i] * th[i];
  ++i;
  c.scale1 = th[i] * th[i];
  ++i;
  if (has_shape(c.family)) c.shape = shape_from_logit(th[i]);
}

double location_of(const EmosCoefficients& c, const EnsembleStats& s) {
  double mu = c.intercept;
  for (std::size_t k = 0; k < c.weights.size(); ++k) mu += c.weights[k] * s.group_means[k];
  return mu;
}

void require_finite_param(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("build_params: non-finite ") + what);
}

ScaleLink resolve_link(Family family, const FitConfig& config) {
  const ScaleLink link = config.scale_link.value_or(default_scale_link(family));
  if (!has_shape(family) && link != ScaleLink::VarLinear) {
    throw ConfigError(std::string(to_string(family)) + " uses the var_linear scale link only");
  }
  return link;
}

}  // namespace

std::string_view to_string(ScaleLink l) {
  switch (l) {
    case ScaleLink::MeanLinear: return "mean_linear";
    case ScaleLink::SdLinear: return "sd_linear";
    case ScaleLink::VarLinear: return "var_linear";
    case ScaleLink::MdLinear: return "md_linear";
  }
  return "?";
}

ScaleLink scale_link_from_string(std::string_view s) {
  if (s == "mean_linear") return ScaleLink::MeanLinear;
  if (s == "sd_linear") return ScaleLink::SdLinear;
  if (s == "var_linear") return ScaleLink::VarLinear;
  if (s == "md_linear") return ScaleLink::MdLinear;
  throw ConfigError("unknown scale link '" + std::string(s) +
                    "' (expected mean_linear, sd_linear, var_linear or md_linear)");
}

std::string_view to_string(ObjectiveKind o) {
  return o == ObjectiveKind::MeanCrps ? "crps" : "logs";
}

ObjectiveKind objective_from_string(std::string_view s) {
  if (s == "crps") return ObjectiveKind::MeanCrps;
  if (s == "logs") return ObjectiveKind::LogLikelihood;
  throw ConfigError("unknown objective '" + std::string(s) + "' (expected crps or logs)");
}

std::string_view to_string(Scope s) { return s == Scope::Global ? "global" : "local"; }

Scope scope_from_string(std::string_view s) {
  if (s == "global") return Scope::Global;
  if (s == "local") return Scope::Local;
  throw ConfigError("unknown scope '" + std::string(s) + "' (expected global or local)");
}

ScaleLink default_scale_link(Family f) {
  return has_shape(f) ? ScaleLink::MeanLinear : ScaleLink::VarLinear;
}

void EmosCoefficients::validate() const {
  auto fail = [this](const std::string& m) {
    throw DomainError(std::string(to_string(family)) + " coefficients: " + m);
  };
  if (weights.empty()) fail("at least one group weight is required");
  if (!std::isfinite(intercept) || !std::isfinite(scale0) || !std::isfinite(scale1) ||
      !std::isfinite(shape)) {
    fail("non-finite value");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) fail("non-finite weight");
    if (!has_shape(family) && w < 0.0) fail("group weights must be >= 0");
  }
  if (scale0 < 0.0 || scale1 < 0.0) fail("scale coefficients must be >= 0");
  if (has_shape(family)) {
    if (!(shape > kShapeLower && shape < kShapeUpper)) fail("shape must lie in ]-0.278, 1/3[");
  } else if (scale_link != ScaleLink::VarLinear) {
    fail("only the var_linear scale link applies");
  }
}

Predictive build_params(const EmosCoefficients& c, const EnsembleStats& s) {
  if (s.group_means.size() != c.weights.size()) {
    throw DomainError("build_params: coefficient count does not match the number of groups");
  }
  const double loc = location_of(c, s);
  require_finite_param(loc, "location");
  switch (c.family) {
    case Family::TruncNormal: {
      const double var = std::max(kScaleFloor, c.scale0 + c.scale1 * s.variance);
      require_finite_param(var, "variance");
      return TruncNormal(loc, std::sqrt(var));
    }
    case Family::LogNormal: {
      const double m = std::max(kScaleFloor, loc);
      const double v = std::max(kScaleFloor, c.scale0 + c.scale1 * s.variance);
      require_finite_param(v, "variance");
      return LogNormal::from_moments(m, v);
    }
    case Family::Gev:
    case Family::Tgev: {
      double sigma = 0.0;
      switch (c.scale_link) {
        case ScaleLink::MeanLinear: sigma = c.scale0 + c.scale1 * s.mean; break;
        case ScaleLink::SdLinear: sigma = c.scale0 + c.scale1 * std::sqrt(s.variance); break;
        case ScaleLink::VarLinear: sigma = std::sqrt(std::max(0.0, c.scale0 + c.scale1 * s.variance)); break;
        case ScaleLink::MdLinear: sigma = c.scale0 + c.scale1 * s.mean_abs_diff; break;
      }
      sigma = std::max(kScaleFloor, sigma);
      require_finite_param(sigma, "scale");
      if (c.family == Family::Gev) return Gev(loc, sigma, c.shape);
      return Tgev(loc, sigma, c.shape);
    }
  }
  throw DomainError("build_params: unknown family");
}

double objective(const EmosCoefficients& c, const TrainingWindow& window, const FitConfig& config) {
  if (window.cases.empty()) throw DomainError("objective: empty training window");
  double sum = 0.0;
  for (std::size_t i = 0; i < window.cases.size(); ++i) {
    const auto& tc = window.cases[i];
    try {
      const Predictive p = build_params(c, tc.stats);
      sum += config.objective == ObjectiveKind::MeanCrps ? crps(p, tc.obs) : log_score(p, tc.obs);
    } catch (const std::exception& e) {
      throw NumericalError("objective: training case " + std::to_string(i) + ": " + e.what());
    }
  }
  return sum / static_cast<double>(window.cases.size());
}

std::size_t free_parameter_count(Family f, std::size_t groups) {
  return 1 + groups + 2 + (has_shape(f) ? 1 : 0);
}

EmosCoefficients initial_coefficients(const TrainingWindow& window, Family family,
                                      const FitConfig& config) {
  if (window.cases.empty()) throw DomainError("initial_coefficients: empty training window");
  const std::size_t k = window.cases.front().stats.group_means.size();
  const ScaleLink link = resolve_link(family, config);
  if (config.initial_point == InitialPoint::Previous && config.warm_start &&
      config.warm_start->family == family && config.warm_start->scale_link == link &&
      config.warm_start->weights.size() == k) {
    return *config.warm_start;
  }
  EmosCoefficients c;
  c.family = family;
  c.scale_link = link;
  if (has_shape(family)) {
    c.intercept = 0.0;
    c.weights.assign(k, 1.0 / static_cast<double>(k));
    c.scale0 = 0.5;
    c.scale1 = 0.1;
    c.shape = 0.1;
    return c;
  }
  // Least squares of the observations on the group means; the complete
  // orthogonal decomposition gives the minimum-norm solution when the group
  // means are collinear.
  const auto n = static_cast<Eigen::Index>(window.cases.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(k + 1));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& tc = window.cases[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < k; ++j) x(i, static_cast<Eigen::Index>(j + 1)) = tc.stats.group_means[j];
    y(i) = tc.obs;
  }
  const Eigen::VectorXd beta = x.completeOrthogonalDecomposition().solve(y);
  c.intercept = std::isfinite(beta(0)) ? beta(0) : 0.0;
  c.weights.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double b = beta(static_cast<Eigen::Index>(j + 1));
    c.weights[j] = std::isfinite(b) ? std::max(0.0, b) : 0.0;
  }
  c.scale0 = 1.0;
  c.scale1 = 0.5;
  return c;
}

FitResult fit(const TrainingWindow& window, Family family, const FitConfig& config) {
  if (config.max_iterations < 1) throw ConfigError("fit: max_iterations must be >= 1");
  if (window.cases.empty()) throw FitError("fit: empty training window", 0, kInf);
  const std::size_t k = window.cases.front().stats.group_means.size();
  const std::size_t needed = free_parameter_count(family, k) + 2;
  if (window.cases.size() < needed) {
    throw FitError("fit: " + std::to_string(window.cases.size()) + " training cases, at least " +
                       std::to_string(needed) + " required",
                   0, kInf);
  }
  const EmosCoefficients start = initial_coefficients(window, family, config);
  EmosCoefficients work = start;
  auto f = [&](std::span<const double> th) {
    from_theta(th, work);
    try {
      return objective(work, window, config);
    } catch (const std::exception&) {
      return kInf;
    }
  };
  double f0 = kInf;
  try {
    f0 = objective(start, window, config);
  } catch (const NumericalError&) {
  }
  if (!std::isfinite(f0)) {
    throw FitError("fit: objective is not finite at the initial point", 0, f0);
  }
  // The search starts from the transformed start, which differs from `start`
  // only where a zero coefficient was nudged off the boundary.
  const std::vector<double> th0 = to_theta(start);

  opt::BfgsOptions bo;
  bo.max_iterations = config.max_iterations;
  bo.rel_tol = config.rel_tol;
  bo.grad_tol = config.grad_tol;
  const opt::BfgsResult r = opt::bfgs_minimize(f, th0, bo);

  FitResult out;
  out.diagnostics.iterations = r.iterations;
  out.diagnostics.evaluations = r.evaluations;
  out.diagnostics.initial_objective = f0;
  out.diagnostics.converged = r.converged;
  out.diagnostics.message = r.message;
  if (std::isfinite(r.value) && r.value <= f0) {
    out.coefficients = start;
    from_theta(r.x, out.coefficients);
    out.diagnostics.final_objective = r.value;
  } else {
    out.coefficients = start;
    out.diagnostics.final_objective = f0;
  }
  out.coefficients.validate();
  return out;
}

std::int64_t first_verification_day(const Dataset& data, int window_days) {
  if (data.forecasts.empty()) throw DomainError("first_verification_day: empty dataset");
  std::int64_t first = data.forecasts.front().valid_day();
  for (const auto& f : data.forecasts) first = std::min(first, f.valid_day());
  return first + window_days;
}

RollingResult rolling_calibrate(const Dataset& data, Family family, const RollingConfig& config) {
  if (config.window_days < 1) throw ConfigError("rolling_calibrate: window_days must be >= 1");
  resolve_link(family, config.fit);
  RollingResult out;
  const std::int64_t first_day = first_verification_day(data, config.window_days);

  std::vector<EnsembleStats> stats;
  stats.reserve(data.size());
  for (const auto& f : data.forecasts) stats.push_back(ensemble_stats(f, data.groups));

  // (lead, day) -> case indices, in dataset order.
  std::map<std::pair<int, std::int64_t>, std::vector<std::size_t>> by_lead_day;
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_lead_day[{data.forecasts[i].lead_time_h, data.forecasts[i].valid_day()}].push_back(i);
  }

  std::map<std::pair<int, std::string>, EmosCoefficients> last_good;

  for (const auto& [key, today] : by_lead_day) {
    const auto [lead, day] = key;
    if (day < first_day) continue;

    std::vector<std::size_t> history;
    for (auto it = by_lead_day.lower_bound({lead, day - config.window_days});
         it != by_lead_day.end() && it->first.first == lead && it->first.second < day; ++it) {
      history.insert(history.end(), it->second.begin(), it->second.end());
    }

    std::vector<std::string> scopes;
    if (config.scope == Scope::Global) {
      scopes.push_back("");
    } else {
      std::set<std::string> s;
      for (std::size_t i : today) s.insert(data.forecasts[i].station_id);
      scopes.assign(s.begin(), s.end());
    }

    for (const std::string& station : scopes) {
      TrainingWindow w;
      w.window_days = config.window_days;
      w.scope = config.scope;
      w.station = station;
      for (std::size_t i : history) {
        if (!station.empty() && data.forecasts[i].station_id != station) continue;
        w.cases.push_back({stats[i], data.observations[i]});
      }
      std::vector<std::size_t> targets;
      for (std::size_t i : today) {
        if (station.empty() || data.forecasts[i].station_id == station) targets.push_back(i);
      }

      const std::size_t needed = free_parameter_count(family, data.groups.groups()) + 2;
      if (w.cases.size() < needed) {
        std::ostringstream reason;
        reason << "insufficient training history (" << w.cases.size() << " cases, " << needed
               << " required)";
        for (std::size_t i : targets) out.skipped.push_back({i, reason.str()});
        continue;
      }

      FitRecord rec;
      rec.day = day;
      rec.lead_time_h = lead;
      rec.station = station;
      rec.training_cases = w.cases.size();
      const auto scope_key = std::make_pair(lead, station);
      FitConfig fc = config.fit;
      if (fc.initial_point == InitialPoint::Previous) {
        auto it = last_good.find(scope_key);
        if (it != last_good.end()) fc.warm_start = it->second;
      }
      try {
        FitResult r = fit(w, family, fc);
        rec.status = "ok";
        rec.coefficients = r.coefficients;
        rec.diagnostics = r.diagnostics;
        last_good[scope_key] = r.coefficients;
      } catch (const NumericalError& e) {
        rec.error = e.what();
        auto it = last_good.find(scope_key);
        if (it == last_good.end()) {
          rec.status = "failed";
          out.fits.push_back(rec);
          for (std::size_t i : targets) {
            out.skipped.push_back({i, "fit failed and no earlier coefficients: " + rec.error});
          }
          continue;
        }
        rec.status = "fallback";
        rec.coefficients = it->second;
      }
      out.fits.push_back(rec);
      const std::size_t fit_index = out.fits.size() - 1;
      for (std::size_t i : targets) {
        try {
          out.cases.push_back({i, build_params(rec.coefficients, stats[i]), fit_index});
        } catch (const std::exception& e) {
          out.skipped.push_back({i, std::string("predictive law not usable: ") + e.what()});
        }
      }
    }
  }
  std::sort(out.cases.begin(), out.cases.end(),
            [](const CalibratedCase& a, const CalibratedCase& b) { return a.case_index < b.case_index; });
  std::sort(out.skipped.begin(), out.skipped.end(),
            [](const SkippedCase& a, const SkippedCase& b) { return a.case_index < b.case_index; });
  return out;
}

std::vector<double> training_observations(const Dataset& data, std::size_t case_index,
                                          int window_days, Scope scope) {
  const auto& target = data.forecasts.at(case_index);
  const std::int64_t day = target.valid_day();
  std::vector<double> obs;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& f = data.forecasts[i];
    if (f.lead_time_h != target.lead_time_h) continue;
    const std::int64_t d = f.valid_day();
    if (d < day - window_days || d >= day) continue;
    if (scope == Scope::Local && f.station_id != target.station_id) continue;
    obs.push_back(data.observations[i]);
  }
  return obs;
}

EmpiricalEnsemble climatology_forecast(const TrainingWindow& window) {
  if (window.cases.empty()) throw DomainError("climatology_forecast: empty training window");
  std::vector<double> obs;
  obs.reserve(window.cases.size());
  for (const auto& c : window.cases) obs.push_back(c.obs);
  return EmpiricalEnsemble(std::move(obs));
}

void to_json(nlohmann::json& j, const EmosCoefficients& c) {
  j = nlohmann::json{{"family", std::string(to_string(c.family))},
                     {"scale_link", std::string(to_string(c.scale_link))},
                     {"intercept", c.intercept},
                     {"weights", c.weights},
                     {"scale", {c.scale0, c.scale1}}};
  if (has_shape(c.family)) {
    j["shape"] = c.shape;
    j["constraints"] = {{"shape_open_interval", {kShapeLower, kShapeUpper}},
                        {"nonnegative", {"scale"}},
                        {"scale_floor", kScaleFloor}};
  } else {
    j["constraints"] = {{"nonnegative", {"weights", "scale"}}, {"scale_floor", kScaleFloor}};
  }
}

void from_json(const nlohmann::json& j, EmosCoefficients& c) {
  try {
    c.family = family_from_string(j.at("family").get<std::string>());
    c.scale_link = j.contains("scale_link")
                       ? scale_link_from_string(j.at("scale_link").get<std::string>())
                       : default_scale_link(c.family);
    c.intercept = j.at("intercept").get<double>();
    c.weights = j.at("weights").get<std::vector<double>>();
    const auto scale = j.at("scale").get<std::vector<double>>();
    if (scale.size() != 2) throw ConfigError("coefficients: scale must have two entries");
    c.scale0 = scale[0];
    c.scale1 = scale[1];
    c.shape = has_shape(c.family) ? j.at("shape").get<double>() : 0.0;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("coefficients: ") + e.what());
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

void to_json(nlohmann::json& j, const FitDiagnostics& d) {
  j = nlohmann::json{{"iterations", d.iterations},
                     {"evaluations", d.evaluations},
                     {"initial_objective", d.initial_objective},
                     {"final_objective", d.final_objective},
                     {"converged", d.converged},
                     {"message", d.message}};
}

}  // namespace windemos
