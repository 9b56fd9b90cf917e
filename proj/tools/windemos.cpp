// Command-line front end: simulate, fit, verify, report.
//
// Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
// configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "windemos/errors.hpp"
#include "windemos/pipeline.hpp"

namespace fs = std::filesystem;
using namespace windemos;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid " + what + " '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("invalid " + what + " '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) throw ConfigError("empty " + what);
  return out;
}

// lo:hi:step -> inclusive grid
std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(parse_number(item, "sweep grid"));
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
    throw ConfigError("sweep grid must be lo:hi:step with step > 0 and hi >= lo");
  }
  std::vector<double> grid;
  const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long i = 0; i <= count; ++i) grid.push_back(parts[0] + static_cast<double>(i) * parts[2]);
  return grid;
}

std::pair<std::string, std::string> parse_model_arg(const std::string& s) {
  const auto eq = s.find('=');
  if (eq != std::string::npos) return {s.substr(0, eq), s.substr(eq + 1)};
  const fs::path p(s);
  const std::string name =
      p.filename() == "params.csv" && p.has_parent_path() ? p.parent_path().filename().string()
                                                          : p.stem().string();
  return {name, s};
}

SyntheticConfig read_synthetic_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in).get<SyntheticConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMOS calibration and verification of wind-speed ensemble forecasts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pipeline::kSoftwareVersion);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  std::string sim_config;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "Generator config (JSON)");
  sim->add_option("--out", sim_out, "Output CSV")->required();
  sim->add_option("--seed", sim_seed, "Override the config seed");

  // fit
  auto* fit = app.add_subcommand("fit", "Rolling-window EMOS calibration");
  std::string fit_data;
  std::string fit_family = "tgev";
  std::string fit_scope = "global";
  std::string fit_objective = "crps";
  std::string fit_link;
  std::string fit_initial = "default";
  std::string fit_missing = "drop";
  std::string fit_out;
  int fit_window = 30;
  int fit_max_iter = 200;
  std::uint64_t fit_seed = 0;
  fit->add_option("--data", fit_data, "Dataset CSV")->required();
  fit->add_option("--family", fit_family, "tn, ln, gev or tgev")
      ->check(CLI::IsMember({"tn", "ln", "gev", "tgev"}));
  fit->add_option("--window-days", fit_window, "Training window length in days");
  fit->add_option("--scope", fit_scope, "global or local")->check(CLI::IsMember({"global", "local"}));
  fit->add_option("--objective", fit_objective, "crps or logs")->check(CLI::IsMember({"crps", "logs"}));
  fit->add_option("--scale-link", fit_link, "mean_linear, sd_linear, var_linear or md_linear");
  fit->add_option("--max-iterations", fit_max_iter, "BFGS iteration cap");
  fit->add_option("--initial-point", fit_initial, "default or previous")
      ->check(CLI::IsMember({"default", "previous"}));
  fit->add_option("--missing", fit_missing, "drop or strict");
  fit->add_option("--seed", fit_seed, "Root seed recorded in the manifest");
  fit->add_option("--out", fit_out, "Output directory")->required();

  // verify
  auto* ver = app.add_subcommand("verify", "Score predictive laws against observations");
  std::string ver_data;
  std::vector<std::string> ver_params;
  std::string ver_reference = "raw";
  std::string ver_thresholds = "auto";
  std::string ver_alpha = "auto";
  std::string ver_scope = "global";
  std::string ver_block = "auto";
  std::string ver_sweep;
  std::string ver_missing = "drop";
  std::string ver_out;
  bool ver_per_station = false;
  int ver_boot = 2000;
  int ver_window = 30;
  std::size_t ver_bins = 10;
  std::uint64_t ver_seed = 0;
  ver->add_option("--data", ver_data, "Dataset CSV")->required();
  ver->add_option("--params", ver_params, "Predictive parameters, [name=]path (repeatable)");
  ver->add_option("--reference", ver_reference, "raw, climatology or a params file");
  ver->add_option("--thresholds", ver_thresholds, "auto or a comma-separated list");
  ver->add_flag("--thresholds-per-station", ver_per_station, "Auto thresholds per station");
  ver->add_option("--alpha", ver_alpha, "auto or a value in ]0,1[");
  ver->add_option("--bootstrap", ver_boot, "Bootstrap replicates (0 disables)");
  ver->add_option("--block-length", ver_block, "auto or a mean block length in days");
  ver->add_option("--seed", ver_seed, "Root seed");
  ver->add_option("--window-days", ver_window, "Climatology window in days");
  ver->add_option("--climatology-scope", ver_scope, "global or local")
      ->check(CLI::IsMember({"global", "local"}));
  ver->add_option("--pit-bins", ver_bins, "PIT histogram bins");
  ver->add_option("--sweep", ver_sweep, "Threshold grid lo:hi:step for threshold_sweep.csv");
  ver->add_option("--missing", ver_missing, "drop or strict");
  ver->add_option("--out", ver_out, "Output directory")->required();

  // report
  auto* rep = app.add_subcommand("report", "Combine verification reports");
  std::vector<std::string> rep_inputs;
  bool rep_baselines = false;
  std::string rep_out;
  rep->add_option("reports", rep_inputs, "report.json files")->required();
  rep->add_flag("--with-baselines", rep_baselines, "Include raw and climatology rows");
  rep->add_option("--out", rep_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) {
      pipeline::SimulateOptions o;
      if (!sim_config.empty()) o.config = read_synthetic_config(sim_config);
      if (sim_seed) o.config.seed = *sim_seed;
      o.out_path = sim_out;
      pipeline::run_simulate(o);
    } else if (*fit) {
      pipeline::FitOptions o;
      o.data_path = fit_data;
      o.family = family_from_string(fit_family);
      o.rolling.window_days = fit_window;
      o.rolling.scope = scope_from_string(fit_scope);
      o.rolling.fit.objective = objective_from_string(fit_objective);
      o.rolling.fit.max_iterations = fit_max_iter;
      if (!fit_link.empty()) o.rolling.fit.scale_link = scale_link_from_string(fit_link);
      o.rolling.fit.initial_point =
          fit_initial == "previous" ? InitialPoint::Previous : InitialPoint::Default;
      o.missing = missing_policy_from_string(fit_missing);
      o.seed = fit_seed;
      o.out_dir = fit_out;
      const auto s = pipeline::run_fit(o);
      if (s.skipped > 0) {
        std::cerr << "warning: " << s.skipped
                  << " cases skipped; reasons are listed in coefficients.json\n";
      }
      if (s.failed_fits > 0) std::cerr << "warning: " << s.failed_fits << " fits failed\n";
    } else if (*ver) {
      pipeline::VerifyOptions o;
      o.data_path = ver_data;
      for (const auto& p : ver_params) o.params.push_back(parse_model_arg(p));
      if (ver_reference == "raw") {
        o.reference = pipeline::ReferenceKind::Raw;
      } else if (ver_reference == "climatology") {
        o.reference = pipeline::ReferenceKind::Climatology;
      } else {
        o.reference = pipeline::ReferenceKind::Params;
        o.reference_params = ver_reference;
      }
      if (ver_thresholds != "auto") o.thresholds = parse_list(ver_thresholds, "threshold list");
      o.thresholds_per_station = ver_per_station;
      if (ver_alpha != "auto") o.alpha = parse_number(ver_alpha, "alpha");
      if (ver_block != "auto") o.block_length = parse_number(ver_block, "block length");
      if (!ver_sweep.empty()) o.sweep = parse_grid(ver_sweep);
      o.bootstrap_replicates = ver_boot;
      o.seed = ver_seed;
      o.window_days = ver_window;
      o.climatology_scope = scope_from_string(ver_scope);
      o.pit_bins = ver_bins;
      o.missing = missing_policy_from_string(ver_missing);
      o.out_dir = ver_out;
      pipeline::run_verify(o);
    } else if (*rep) {
      pipeline::ReportOptions o;
      o.reports = rep_inputs;
      o.with_baselines = rep_baselines;
      o.out_dir = rep_out;
      pipeline::run_report(o);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
