#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "windemos/distributions.hpp"
#include "windemos/forecast.hpp"

namespace windemos {

/// Forecast cases with paired observations. Keys (station, valid_time,
/// lead_time) are unique; all values are finite and nonnegative.
struct Dataset {
  GroupSpec groups;
  std::vector<EnsembleForecast> forecasts;
  std::vector<double> observations;
  /// Rows dropped on load because of missing values.
  std::size_t dropped_rows = 0;

  std::size_t size() const { return forecasts.size(); }
  /// Sorted distinct station ids.
  std::vector<std::string> stations() const;
  /// Sorted distinct lead times.
  std::vector<int> lead_times() const;
  /// Throws ValidationError on any invariant violation.
  void validate() const;
};

enum class MissingPolicy { Drop, Strict };
MissingPolicy missing_policy_from_string(const std::string& s);

/// Reads `station_id,valid_time,lead_time_h,obs,m_1,...,m_M`. Empty fields and
/// NA/NaN count as missing. Without an explicit group spec the sidecar
/// `<path>.groups.json` is used if present, else a single group.
Dataset load_dataset(const std::string& path, const std::optional<GroupSpec>& groups = {},
                     MissingPolicy policy = MissingPolicy::Drop);
Dataset parse_dataset(const std::string& csv_text, const GroupSpec* groups,
                      MissingPolicy policy = MissingPolicy::Drop);

/// CSV text with 6 decimals; rows in stored order.
std::string to_csv(const Dataset& d);
/// Writes the CSV and its `<path>.groups.json` sidecar.
void save_dataset(const std::string& path, const Dataset& d);

std::string groups_sidecar_path(const std::string& data_path);
GroupSpec read_group_spec(const std::string& path);
void write_group_spec(const std::string& path, const GroupSpec& g);

/// Synthetic wind-speed generator configuration.
///
/// Per station s and day d a location lambda follows
///   base_s + seasonal_amplitude * sin(2 pi d / 365) + AR(1) anomaly,
/// floored at location_floor. The observation is drawn from the truth family
/// with that location (the mean for ln) and the configured scale and shape.
/// Members are truth draws z_i mapped to
///   max(0, lambda + bias_s + dispersion * (z_i - lambda)),
/// with bias_s = bias + station bias spread. An optional control member
/// lambda + bias_s is placed first.
struct SyntheticConfig {
  Family truth = Family::Tgev;
  double scale = 1.2;
  double shape = 0.1;
  double base_min = 4.0;
  double base_max = 7.0;
  double seasonal_amplitude = 1.0;
  double ar_coefficient = 0.7;
  double ar_sd = 1.0;
  double location_floor = 0.5;
  double bias = 0.8;
  double station_bias_sd = 0.0;
  double dispersion = 0.4;
  std::vector<std::size_t> group_sizes{1, 10};
  bool control_member = true;
  int stations = 10;
  int days = 330;
  int lead_time_h = 24;
  std::string start_date = "2021-01-01";
  std::uint64_t seed = 20240601;

  /// Throws ConfigError on invalid values.
  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticConfig& c);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
void from_json(const nlohmann::json& j, SyntheticConfig& c);

/// Deterministic in the config; values are rounded to 6 decimals so a saved
/// and reloaded dataset compares equal.
Dataset generate_synthetic(const SyntheticConfig& config);

/// Predictive law used by the generator as the truth for one location.
Predictive synthetic_truth(const SyntheticConfig& config, double location);

}  // namespace windemos
