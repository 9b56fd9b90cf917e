#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "windemos/dataio.hpp"
#include "windemos/distributions.hpp"
#include "windemos/emos.hpp"

// Batch runs behind the command-line tool. Every run writes its outputs into a
// directory and returns the manifest it wrote.
namespace windemos::pipeline {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kSoftwareVersion = "0.1.0";

/// (station, valid_time, lead_time_h)
struct CaseKey {
  std::string station_id;
  UnixTime valid_time = 0;
  int lead_time_h = 0;
  auto operator<=>(const CaseKey&) const = default;
};
CaseKey key_of(const EnsembleForecast& f);
std::string to_string(const CaseKey& k);

struct ParamsRow {
  CaseKey key;
  Predictive law;
};

/// `station_id,valid_time,lead_time_h,family,location,scale,shape`. For ln the
/// location and scale are the log-location and log-scale; shape is empty for
/// tn and ln. Numbers are written with 17 significant digits.
std::string params_to_csv(const std::vector<ParamsRow>& rows);
std::vector<ParamsRow> parse_params_csv(const std::string& text);
std::vector<ParamsRow> read_params_csv(const std::string& path);

/// Hex FNV-1a digest of a file's bytes.
std::string file_digest(const std::string& path);

/// Run manifest. `timings` holds wall-clock seconds and is the only part
/// that differs between reruns.
struct Manifest {
  std::string command;
  nlohmann::json config;
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // file name -> digest
  std::uint64_t seed = 0;
  std::map<std::string, double> timings;
};
void to_json(nlohmann::json& j, const Manifest& m);
void write_manifest(const std::string& path, const Manifest& m);

// simulate

struct SimulateOptions {
  SyntheticConfig config;
  std::string out_path;  // CSV; sidecar and manifest are written next to it
};
Manifest run_simulate(const SimulateOptions& opts);

// fit

struct FitOptions {
  std::string data_path;
  Family family = Family::Tgev;
  RollingConfig rolling;
  MissingPolicy missing = MissingPolicy::Drop;
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct FitSummary {
  Manifest manifest;
  std::size_t calibrated = 0;
  std::size_t skipped = 0;
  std::size_t failed_fits = 0;
};
/// Writes coefficients.json, params.csv and manifest.json. Throws
/// NumericalError when no case could be calibrated.
FitSummary run_fit(const FitOptions& opts);

// verify

enum class ReferenceKind { Raw, Climatology, Params };

struct VerifyOptions {
  std::string data_path;
  /// Model name -> params file.
  std::vector<std::pair<std::string, std::string>> params;
  ReferenceKind reference = ReferenceKind::Raw;
  std::string reference_params;  // used with ReferenceKind::Params
  /// Absolute thresholds; empty means the 90th, 95th and 98th percentiles of
  /// the verification observations per lead time.
  std::vector<double> thresholds;
  bool thresholds_per_station = false;
  /// Unset means 2 / (K + 1).
  std::optional<double> alpha;
  int bootstrap_replicates = 2000;
  std::optional<double> block_length;
  std::uint64_t seed = 0;
  int window_days = 30;
  Scope climatology_scope = Scope::Global;
  std::size_t pit_bins = 10;
  /// Optional absolute threshold grid for threshold_sweep.csv.
  std::vector<double> sweep;
  MissingPolicy missing = MissingPolicy::Drop;
  std::string out_dir;
};

/// Writes report.json, pit.csv, rank.csv, thresholds.csv, twcrps.csv,
/// strata.csv, prob_negative.csv, threshold_sweep.csv (with a sweep grid) and
/// manifest.json. Returns the report.
nlohmann::json run_verify(const VerifyOptions& opts);

// report

struct ReportOptions {
  std::vector<std::string> reports;
  bool with_baselines = false;
  std::string out_dir;
};
/// One row per model: CRPS, MAE, RMSE, coverage, average width, CRPSS.
/// Writes summary.csv and summary.json. Throws ConfigError on schema mismatch.
nlohmann::json run_report(const ReportOptions& opts);

}  // namespace windemos::pipeline
