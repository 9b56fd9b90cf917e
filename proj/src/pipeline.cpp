#include "windemos/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "windemos/errors.hpp"
#include "windemos/random.hpp"
#include "windemos/scoring.hpp"
#include "windemos/verification.hpp"

namespace windemos::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxListedKeys = 20;
constexpr double kAutoThresholdLevels[] = {90.0, 95.0, 98.0};
constexpr std::size_t kMinBootstrapDays = 10;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string fnv_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string num17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<double> to_double(std::string_view s) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

void prepare_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("an output directory is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Writes a file into the output directory and records its digest.
void emit(const std::string& dir, const std::string& name, const std::string& text, Manifest& m) {
  write_text(join_path(dir, name), text);
  m.outputs[name] = fnv_hex(text);
}

std::string date_of_day(std::int64_t day) { return format_time(day * 86400).substr(0, 10); }

std::uint64_t case_seed(std::uint64_t root, const CaseKey& k) {
  return derive_seed(root, {fnv1a64(k.station_id), static_cast<std::uint64_t>(k.valid_time),
                            static_cast<std::uint64_t>(k.lead_time_h)});
}

}  // namespace

CaseKey key_of(const EnsembleForecast& f) { return {f.station_id, f.valid_time, f.lead_time_h}; }

std::string to_string(const CaseKey& k) {
  return k.station_id + "/" + format_time(k.valid_time) + "/" + std::to_string(k.lead_time_h) + "h";
}

std::string params_to_csv(const std::vector<ParamsRow>& rows) {
  std::string out = "station_id,valid_time,lead_time_h,family,location,scale,shape\n";
  for (const auto& r : rows) {
    out += r.key.station_id + ',' + format_time(r.key.valid_time) + ',' +
           std::to_string(r.key.lead_time_h) + ',' + std::string(to_string(family_of(r.law))) + ',';
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, TruncNormal>) {
            out += num17(d.location()) + ',' + num17(d.scale()) + ',';
          } else if constexpr (std::is_same_v<T, LogNormal>) {
            out += num17(d.log_location()) + ',' + num17(d.log_scale()) + ',';
          } else {
            out += num17(d.location()) + ',' + num17(d.scale()) + ',' + num17(d.shape());
          }
        },
        r.law);
    out += '\n';
  }
  return out;
}

std::vector<ParamsRow> parse_params_csv(const std::string& text) {
  std::vector<ParamsRow> rows;
  std::vector<std::size_t> bad;
  std::string first_error;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line != "station_id,valid_time,lead_time_h,family,location,scale,shape") {
        throw ParseError("params: unexpected header", {lineno});
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, ',');
    try {
      if (f.size() != 7) throw DomainError("expected 7 fields");
      CaseKey key;
      key.station_id = std::string(f[0]);
      key.valid_time = parse_time(std::string(f[1]));
      const auto lead = to_double(f[2]);
      if (!lead || *lead != std::floor(*lead)) throw DomainError("bad lead time");
      key.lead_time_h = static_cast<int>(*lead);
      const Family fam = family_from_string(f[3]);
      const auto loc = to_double(f[4]);
      const auto scale = to_double(f[5]);
      if (!loc || !scale) throw DomainError("bad location or scale");
      const auto law = [&]() -> Predictive {
        switch (fam) {
          case Family::TruncNormal:
            return TruncNormal(*loc, *scale);
          case Family::LogNormal:
            return LogNormal(*loc, *scale);
          case Family::Gev:
          case Family::Tgev:
            break;
        }
        const auto shape = to_double(f[6]);
        if (!shape) throw DomainError("bad shape");
        if (fam == Family::Gev) return Gev(*loc, *scale, *shape);
        return Tgev(*loc, *scale, *shape);
      }();
      rows.push_back({std::move(key), law});
    } catch (const std::exception& e) {
      if (first_error.empty()) first_error = e.what();
      bad.push_back(lineno);
    }
  }
  if (!header_seen) throw ParseError("params: empty file", {});
  if (!bad.empty()) {
    std::string msg = "params: malformed rows at lines";
    for (std::size_t i = 0; i < std::min(bad.size(), kMaxListedKeys); ++i) {
      msg += ' ' + std::to_string(bad[i]);
    }
    throw ParseError(msg + " (" + first_error + ")", bad);
  }
  return rows;
}

std::vector<ParamsRow> read_params_csv(const std::string& path) {
  return parse_params_csv(read_text(path));
}

std::string file_digest(const std::string& path) { return fnv_hex(read_text(path)); }

void to_json(json& j, const Manifest& m) {
  j = json{{"command", m.command},   {"software_version", kSoftwareVersion},
           {"seed", m.seed},         {"config", m.config},
           {"inputs", m.inputs},     {"outputs", m.outputs},
           {"timings", m.timings}};
}

void write_manifest(const std::string& path, const Manifest& m) {
  write_text(path, json(m).dump(2) + "\n");
}

// simulate

Manifest run_simulate(const SimulateOptions& opts) {
  Stopwatch clock;
  opts.config.validate();
  if (opts.out_path.empty()) throw ConfigError("simulate: an output path is required");
  const fs::path parent = fs::path(opts.out_path).parent_path();
  if (!parent.empty()) prepare_dir(parent.string());

  const Dataset data = generate_synthetic(opts.config);
  save_dataset(opts.out_path, data);

  Manifest m;
  m.command = "simulate";
  m.config = opts.config;
  m.seed = opts.config.seed;
  const std::string name = fs::path(opts.out_path).filename().string();
  m.outputs[name] = file_digest(opts.out_path);
  m.outputs[fs::path(groups_sidecar_path(opts.out_path)).filename().string()] =
      file_digest(groups_sidecar_path(opts.out_path));
  m.timings["total_s"] = clock.seconds();
  write_manifest(opts.out_path + ".manifest.json", m);
  return m;
}

// fit

FitSummary run_fit(const FitOptions& opts) {
  Stopwatch clock;
  prepare_dir(opts.out_dir);
  const Dataset data = load_dataset(opts.data_path, std::nullopt, opts.missing);
  const double load_s = clock.seconds();

  const RollingResult res = rolling_calibrate(data, opts.family, opts.rolling);
  const double fit_s = clock.seconds() - load_s;

  const auto& fc = opts.rolling.fit;
  const ScaleLink link = fc.scale_link.value_or(default_scale_link(opts.family));
  json config{{"family", std::string(to_string(opts.family))},
              {"window_days", opts.rolling.window_days},
              {"scope", std::string(to_string(opts.rolling.scope))},
              {"objective", std::string(to_string(fc.objective))},
              {"scale_link", std::string(to_string(link))},
              {"max_iterations", fc.max_iterations},
              {"rel_tol", fc.rel_tol},
              {"grad_tol", fc.grad_tol},
              {"initial_point", fc.initial_point == InitialPoint::Previous ? "previous" : "default"},
              {"data", opts.data_path}};

  FitSummary summary;
  json fits = json::array();
  for (const auto& rec : res.fits) {
    json jf{{"valid_date", date_of_day(rec.day)},
            {"lead_time_h", rec.lead_time_h},
            {"station_id", rec.station.empty() ? json(nullptr) : json(rec.station)},
            {"training_window",
             {{"first_date", date_of_day(rec.day - opts.rolling.window_days)},
              {"last_date", date_of_day(rec.day - 1)},
              {"cases", rec.training_cases}}},
            {"status", rec.status}};
    if (!rec.error.empty()) jf["error"] = rec.error;
    if (rec.status != "failed") jf["coefficients"] = rec.coefficients;
    if (rec.status == "ok") jf["diagnostics"] = rec.diagnostics;
    if (rec.status == "failed") ++summary.failed_fits;
    fits.push_back(std::move(jf));
  }
  json skipped = json::array();
  for (const auto& s : res.skipped) {
    const auto& f = data.forecasts[s.case_index];
    skipped.push_back({{"station_id", f.station_id},
                       {"valid_time", format_time(f.valid_time)},
                       {"lead_time_h", f.lead_time_h},
                       {"reason", s.reason}});
  }
  json coeffs{{"schema_version", kReportSchemaVersion},
              {"config", config},
              {"fits", fits},
              {"skipped", skipped}};

  std::vector<ParamsRow> rows;
  rows.reserve(res.cases.size());
  for (const auto& c : res.cases) rows.push_back({key_of(data.forecasts[c.case_index]), c.params});

  Manifest m;
  m.command = "fit";
  m.config = config;
  m.seed = opts.seed;
  m.inputs[opts.data_path] = file_digest(opts.data_path);
  emit(opts.out_dir, "coefficients.json", coeffs.dump(2) + "\n", m);
  emit(opts.out_dir, "params.csv", params_to_csv(rows), m);
  m.timings["load_s"] = load_s;
  m.timings["fit_s"] = fit_s;
  m.timings["total_s"] = clock.seconds();
  write_manifest(join_path(opts.out_dir, "manifest.json"), m);

  summary.manifest = m;
  summary.calibrated = res.cases.size();
  summary.skipped = res.skipped.size();
  if (res.cases.empty()) {
    throw NumericalError("fit: no verification case could be calibrated (" +
                         std::to_string(res.skipped.size()) + " skipped)");
  }
  return summary;
}

// verify

namespace {

struct Model {
  std::string name;
  std::string kind;  // family token, "raw" or "climatology"
  bool baseline = false;
  std::vector<ForecastLaw> laws;
};

std::vector<ForecastLaw> laws_for(const std::vector<ParamsRow>& rows,
                                  const std::map<CaseKey, std::size_t>& dataset_index,
                                  const std::vector<std::size_t>& cases, const Dataset& data,
                                  const std::string& what) {
  std::map<std::size_t, const Predictive*> by_case;
  std::vector<std::string> unmatched;
  for (const auto& r : rows) {
    auto it = dataset_index.find(r.key);
    if (it == dataset_index.end()) {
      unmatched.push_back(to_string(r.key) + " (not in data)");
      continue;
    }
    if (!by_case.emplace(it->second, &r.law).second) {
      unmatched.push_back(to_string(r.key) + " (duplicate)");
    }
  }
  std::set<std::size_t> wanted(cases.begin(), cases.end());
  for (const auto& [idx, law] : by_case) {
    if (!wanted.count(idx)) unmatched.push_back(to_string(key_of(data.forecasts[idx])) + " (extra)");
  }
  for (std::size_t idx : cases) {
    if (!by_case.count(idx)) unmatched.push_back(to_string(key_of(data.forecasts[idx])) + " (missing)");
  }
  if (!unmatched.empty()) {
    std::string msg = what + ": " + std::to_string(unmatched.size()) + " unmatched cases:";
    for (std::size_t i = 0; i < std::min(unmatched.size(), kMaxListedKeys); ++i) {
      msg += "\n  " + unmatched[i];
    }
    if (unmatched.size() > kMaxListedKeys) msg += "\n  ...";
    throw ValidationError(msg);
  }
  std::vector<ForecastLaw> out;
  out.reserve(cases.size());
  for (std::size_t idx : cases) out.emplace_back(*by_case.at(idx));
  return out;
}

// Averages per-case values within each valid day, in day order.
class DailySeries {
 public:
  explicit DailySeries(const std::vector<std::int64_t>& case_days) {
    std::set<std::int64_t> days(case_days.begin(), case_days.end());
    std::map<std::int64_t, std::size_t> pos;
    for (std::int64_t d : days) pos.emplace(d, pos.size());
    slot_.reserve(case_days.size());
    for (std::int64_t d : case_days) slot_.push_back(pos.at(d));
    count_.assign(days.size(), 0);
    for (std::size_t s : slot_) ++count_[s];
  }
  std::size_t days() const { return count_.size(); }
  std::vector<double> means(const std::vector<double>& per_case) const {
    std::vector<double> sum(count_.size(), 0.0);
    for (std::size_t i = 0; i < per_case.size(); ++i) sum[slot_[i]] += per_case[i];
    for (std::size_t d = 0; d < sum.size(); ++d) sum[d] /= static_cast<double>(count_[d]);
    return sum;
  }

 private:
  std::vector<std::size_t> slot_;
  std::vector<std::size_t> count_;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

json ci_json(const BootstrapCi& ci) { return json{{"lower", ci.lower}, {"upper", ci.upper}}; }

struct Bootstrapper {
  const DailySeries& daily;
  BootstrapOptions base;
  std::uint64_t root = 0;

  bool enabled() const { return base.replicates > 0 && daily.days() >= kMinBootstrapDays; }

  BootstrapOptions options_for(const std::string& model, const std::string& metric) const {
    BootstrapOptions o = base;
    o.seed = derive_seed(root, {fnv1a64(model), fnv1a64(metric)});
    return o;
  }

  json mean_ci(const std::vector<double>& per_case, const std::string& model,
               const std::string& metric) const {
    if (!enabled()) return nullptr;
    return ci_json(stationary_bootstrap_ci(daily.means(per_case), options_for(model, metric)));
  }

  json rmse_ci(const std::vector<double>& sq_err, const std::string& model) const {
    if (!enabled()) return nullptr;
    const auto ci = stationary_bootstrap_ci(daily.means(sq_err), options_for(model, "rmse"));
    return json{{"lower", std::sqrt(ci.lower)}, {"upper", std::sqrt(ci.upper)}};
  }

  json skill_ci(const std::vector<double>& scores, const std::vector<double>& ref,
                const std::string& model, const std::string& metric) const {
    if (!enabled()) return nullptr;
    try {
      return ci_json(stationary_bootstrap_skill_ci(daily.means(scores), daily.means(ref),
                                                   options_for(model, metric)));
    } catch (const DomainError&) {
      return nullptr;
    }
  }
};

json skill_value(double score, double ref) {
  if (!(ref > 0.0)) return nullptr;
  return skill_score(score, ref);
}

// Negative-wind probability of a parametric law; zero for the truncated families.
double negative_mass(const Predictive& p) {
  if (const auto* g = std::get_if<Gev>(&p)) return prob_negative(*g);
  return 0.0;
}

struct ThresholdLevels {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> per_case;  // [case][level]
  std::string table;                          // thresholds.csv
};

ThresholdLevels threshold_levels(const VerifyOptions& opts, const Dataset& data,
                                 const std::vector<std::size_t>& cases) {
  ThresholdLevels t;
  t.table = "lead_time_h,station_id,level,threshold\n";
  t.per_case.resize(cases.size());
  if (!opts.thresholds.empty()) {
    for (double r : opts.thresholds) t.labels.push_back("r=" + num(r));
    for (auto& v : t.per_case) v = opts.thresholds;
    for (std::size_t j = 0; j < opts.thresholds.size(); ++j) {
      t.table += ",," + t.labels[j] + ',' + num(opts.thresholds[j]) + '\n';
    }
    return t;
  }
  for (double p : kAutoThresholdLevels) t.labels.push_back("p" + num(p));
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& f = data.forecasts[cases[c]];
    groups[{f.lead_time_h, opts.thresholds_per_station ? f.station_id : std::string()}].push_back(c);
  }
  for (const auto& [g, members] : groups) {
    std::vector<double> obs;
    for (std::size_t c : members) obs.push_back(data.observations[cases[c]]);
    std::vector<double> values;
    for (std::size_t j = 0; j < std::size(kAutoThresholdLevels); ++j) {
      values.push_back(percentile(obs, kAutoThresholdLevels[j]));
      t.table += std::to_string(g.first) + ',' + g.second + ',' + t.labels[j] + ',' +
                 num(values.back()) + '\n';
    }
    for (std::size_t c : members) t.per_case[c] = values;
  }
  return t;
}

}  // namespace

json run_verify(const VerifyOptions& opts) {
  Stopwatch clock;
  prepare_dir(opts.out_dir);
  if (opts.pit_bins < 1) throw ConfigError("verify: pit bins must be >= 1");
  if (opts.bootstrap_replicates < 0) throw ConfigError("verify: bootstrap replicates must be >= 0");
  if (opts.window_days < 1) throw ConfigError("verify: window days must be >= 1");
  if (opts.reference == ReferenceKind::Params && opts.reference_params.empty()) {
    throw ConfigError("verify: reference params file missing");
  }

  Manifest m;
  m.command = "verify";
  m.seed = opts.seed;
  const Dataset data = load_dataset(opts.data_path, std::nullopt, opts.missing);
  m.inputs[opts.data_path] = file_digest(opts.data_path);
  std::map<CaseKey, std::size_t> index;
  for (std::size_t i = 0; i < data.size(); ++i) index.emplace(key_of(data.forecasts[i]), i);

  std::vector<std::pair<std::string, std::vector<ParamsRow>>> loaded;
  std::set<std::string> names{"raw", "climatology"};
  for (const auto& [name, path] : opts.params) {
    if (!names.insert(name).second) throw ConfigError("verify: duplicate model name " + name);
    loaded.emplace_back(name, read_params_csv(path));
    m.inputs[path] = file_digest(path);
  }

  // The verification set is the case set of the first model, or every case
  // with a full climatology window when only baselines are verified.
  std::vector<std::size_t> cases;
  if (!loaded.empty()) {
    for (const auto& r : loaded.front().second) {
      auto it = index.find(r.key);
      if (it != index.end()) cases.push_back(it->second);
    }
  } else {
    const std::int64_t first = first_verification_day(data, opts.window_days);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.forecasts[i].valid_day() >= first) cases.push_back(i);
    }
  }
  std::sort(cases.begin(), cases.end());
  cases.erase(std::unique(cases.begin(), cases.end()), cases.end());
  if (cases.empty()) throw ValidationError("verify: no verification cases");
  const std::size_t n = cases.size();

  std::vector<Model> models;
  for (const auto& [name, rows] : loaded) {
    Model md;
    md.name = name;
    md.laws = laws_for(rows, index, cases, data, "params " + name);
    md.kind = std::string(to_string(family_of(*md.laws.front().parametric())));
    models.push_back(std::move(md));
  }
  {
    Model raw{"raw", "raw", true, {}};
    Model clim{"climatology", "climatology", true, {}};
    for (std::size_t idx : cases) {
      raw.laws.emplace_back(EmpiricalEnsemble(data.forecasts[idx].members));
      auto obs = training_observations(data, idx, opts.window_days, opts.climatology_scope);
      if (obs.empty()) {
        throw ValidationError("verify: no climatology history for " +
                              to_string(key_of(data.forecasts[idx])));
      }
      clim.laws.emplace_back(EmpiricalEnsemble(std::move(obs)));
    }
    models.push_back(std::move(raw));
    models.push_back(std::move(clim));
  }

  std::string reference_name;
  std::vector<ForecastLaw> reference;
  switch (opts.reference) {
    case ReferenceKind::Raw:
      reference_name = "raw";
      reference = models[models.size() - 2].laws;
      break;
    case ReferenceKind::Climatology:
      reference_name = "climatology";
      reference = models.back().laws;
      break;
    case ReferenceKind::Params:
      reference_name = opts.reference_params;
      reference = laws_for(read_params_csv(opts.reference_params), index, cases, data, "reference");
      m.inputs[opts.reference_params] = file_digest(opts.reference_params);
      break;
  }

  std::vector<double> obs(n);
  std::vector<std::int64_t> days(n);
  std::vector<double> ens_mean(n);
  for (std::size_t c = 0; c < n; ++c) {
    obs[c] = data.observations[cases[c]];
    days[c] = data.forecasts[cases[c]].valid_day();
    ens_mean[c] = mean(EmpiricalEnsemble(data.forecasts[cases[c]].members));
  }
  const DailySeries daily(days);
  const std::size_t k_members = data.groups.members();
  const double alpha = opts.alpha.value_or(nominal_alpha(k_members));
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("verify: alpha must lie in ]0,1[");
  const double nominal_level = 100.0 * (1.0 - alpha);

  const ThresholdLevels levels = threshold_levels(opts, data, cases);
  const std::size_t n_levels = levels.labels.size();

  std::vector<double> ref_crps(n);
  std::vector<std::vector<double>> ref_tw(n_levels, std::vector<double>(n));
  for (std::size_t c = 0; c < n; ++c) {
    ref_crps[c] = reference[c].crps(obs[c]);
    for (std::size_t j = 0; j < n_levels; ++j) {
      ref_tw[j][c] = reference[c].twcrps(obs[c], levels.per_case[c][j]);
    }
  }

  BootstrapOptions boot_base;
  boot_base.replicates = opts.bootstrap_replicates;
  boot_base.mean_block_length = opts.block_length;
  const Bootstrapper boot{daily, boot_base, derive_seed(opts.seed, {fnv1a64("bootstrap")})};
  const double block = opts.block_length.value_or(default_block_length(daily.days()));

  std::vector<std::int64_t> leads;
  for (std::size_t idx : cases) leads.push_back(data.forecasts[idx].lead_time_h);
  const std::set<std::int64_t> lead_set(leads.begin(), leads.end());

  std::string pit_csv = "model,bin_lower,bin_upper,count\n";
  std::string rank_csv = "rank,count\n";
  std::string tw_csv = "model,level,mean_twcrps,mean_twcrps_reference,twcrpss\n";
  std::string strata_csv =
      "model,lead_time_h,stratum,lower_cut,upper_cut,count,mean_crps,mean_crps_reference,crpss\n";
  std::string neg_csv = "model,mean,q90,q95,q99\n";
  std::string sweep_csv = "model,threshold,mean_twcrps,mean_twcrps_reference,twcrpss\n";

  json jmodels = json::array();
  for (const auto& md : models) {
    std::vector<double> crps_v(n), abs_err(n), sq_err(n), pits(n);
    std::vector<std::vector<double>> tw(n_levels, std::vector<double>(n));
    std::vector<Interval> intervals(n);
    std::vector<double> neg;
    for (std::size_t c = 0; c < n; ++c) {
      const ForecastLaw& law = md.laws[c];
      const double x = obs[c];
      crps_v[c] = law.crps(x);
      abs_err[c] = std::fabs(law.median() - x);
      const double e = law.mean() - x;
      sq_err[c] = e * e;
      for (std::size_t j = 0; j < n_levels; ++j) tw[j][c] = law.twcrps(x, levels.per_case[c][j]);
      const auto key = key_of(data.forecasts[cases[c]]);
      pits[c] = pit(law, x, derive_seed(case_seed(opts.seed, key), {fnv1a64(md.name)}));
      intervals[c] = central_interval(law, alpha);
      if (const auto* p = law.parametric()) neg.push_back(negative_mass(*p));
    }

    const double crps_mean = mean_of(crps_v);
    const double ref_mean = mean_of(ref_crps);
    json jm{{"name", md.name},
            {"kind", md.kind},
            {"baseline", md.baseline},
            {"cases", n},
            {"crps", {{"mean", crps_mean}, {"ci", boot.mean_ci(crps_v, md.name, "crps")}}},
            {"mae", {{"mean", mean_of(abs_err)}, {"ci", boot.mean_ci(abs_err, md.name, "mae")}}},
            {"rmse", {{"value", std::sqrt(mean_of(sq_err))}, {"ci", boot.rmse_ci(sq_err, md.name)}}},
            {"crpss",
             {{"value", skill_value(crps_mean, ref_mean)},
              {"ci", boot.skill_ci(crps_v, ref_crps, md.name, "crpss")}}}};

    json jtw = json::array();
    for (std::size_t j = 0; j < n_levels; ++j) {
      const double tm = mean_of(tw[j]);
      const double tr = mean_of(ref_tw[j]);
      const json sk = skill_value(tm, tr);
      jtw.push_back({{"level", levels.labels[j]},
                     {"mean", tm},
                     {"ci", boot.mean_ci(tw[j], md.name, "twcrps " + levels.labels[j])},
                     {"reference_mean", tr},
                     {"twcrpss", sk},
                     {"twcrpss_ci", boot.skill_ci(tw[j], ref_tw[j], md.name, "twcrpss " + levels.labels[j])}});
      tw_csv += md.name + ',' + levels.labels[j] + ',' + num(tm) + ',' + num(tr) + ',' +
                (sk.is_null() ? std::string() : num(sk.get<double>())) + '\n';
    }
    jm["twcrps"] = std::move(jtw);

    const IntervalStats is = coverage_and_width(intervals, obs, nominal_level);
    jm["interval"] = {{"alpha", alpha},
                      {"nominal_level", is.nominal_level},
                      {"coverage", is.coverage},
                      {"average_width", is.average_width}};

    const PitHistogram ph = pit_histogram(pits, opts.pit_bins);
    const TestResult ks = ks_uniform_test(pits);
    const TestResult pit_chi = chi_square_uniform_test(ph.counts);
    jm["pit"] = {{"counts", ph.counts},
                 {"ks", {{"statistic", ks.statistic}, {"p_value", ks.p_value}}},
                 {"chi_square", {{"statistic", pit_chi.statistic}, {"p_value", pit_chi.p_value}}}};
    for (std::size_t b = 0; b < ph.counts.size(); ++b) {
      pit_csv += md.name + ',' + num(ph.edges[b]) + ',' + num(ph.edges[b + 1]) + ',' +
                 std::to_string(ph.counts[b]) + '\n';
    }

    if (!neg.empty()) {
      jm["prob_negative"] = {{"mean", mean_of(neg)},
                             {"q90", percentile(neg, 90.0)},
                             {"q95", percentile(neg, 95.0)},
                             {"q99", percentile(neg, 99.0)}};
      neg_csv += md.name + ',' + num(mean_of(neg)) + ',' + num(percentile(neg, 90.0)) + ',' +
                 num(percentile(neg, 95.0)) + ',' + num(percentile(neg, 99.0)) + '\n';
    }

    json jstrata = json::array();
    for (std::int64_t lead : lead_set) {
      std::vector<double> sm, ss, sr;
      for (std::size_t c = 0; c < n; ++c) {
        if (leads[c] != lead) continue;
        sm.push_back(ens_mean[c]);
        ss.push_back(crps_v[c]);
        sr.push_back(ref_crps[c]);
      }
      for (const Stratum& s : stratified_scores(sm, ss, sr)) {
        json js{{"lead_time_h", lead},
                {"stratum", s.name},
                {"lower_cut", s.lower_cut},
                {"upper_cut", s.upper_cut},
                {"count", s.count},
                {"reported", s.reported}};
        if (s.reported) {
          js["mean_crps"] = s.mean_score;
          js["mean_crps_reference"] = s.mean_reference;
          js["crpss"] = s.skill ? json(*s.skill) : json(nullptr);
        }
        jstrata.push_back(js);
        strata_csv += md.name + ',' + std::to_string(lead) + ',' + s.name + ',' + num(s.lower_cut) +
                      ',' + num(s.upper_cut) + ',' + std::to_string(s.count) + ',' +
                      (s.reported ? num(s.mean_score) : "") + ',' +
                      (s.reported ? num(s.mean_reference) : "") + ',' + num(s.skill) + '\n';
      }
    }
    jm["strata"] = std::move(jstrata);

    if (md.name == "raw") {
      std::vector<int> ranks(n);
      for (std::size_t c = 0; c < n; ++c) {
        const auto key = key_of(data.forecasts[cases[c]]);
        ranks[c] = verification_rank(data.forecasts[cases[c]].members, obs[c],
                                     derive_seed(case_seed(opts.seed, key), {fnv1a64("rank")}));
      }
      const RankHistogram rh = rank_histogram(ranks, k_members);
      const TestResult rc = chi_square_uniform_test(rh.counts);
      jm["rank"] = {{"counts", rh.counts},
                    {"chi_square", {{"statistic", rc.statistic}, {"p_value", rc.p_value}}}};
      for (std::size_t r = 0; r < rh.counts.size(); ++r) {
        rank_csv += std::to_string(r + 1) + ',' + std::to_string(rh.counts[r]) + '\n';
      }
    }

    if (!opts.sweep.empty()) {
      for (const auto& row : threshold_sweep(md.laws, obs, opts.sweep, reference)) {
        sweep_csv += md.name + ',' + num(row.threshold) + ',' + num(row.mean_twcrps) + ',' +
                     num(row.mean_twcrps_reference) + ',' + num(row.skill) + '\n';
      }
    }
    jmodels.push_back(std::move(jm));
  }

  json config{{"data", opts.data_path},
              {"reference", reference_name},
              {"thresholds", opts.thresholds.empty() ? json("auto") : json(opts.thresholds)},
              {"thresholds_per_station", opts.thresholds_per_station},
              {"alpha", opts.alpha ? json(*opts.alpha) : json("auto")},
              {"bootstrap", opts.bootstrap_replicates},
              {"block_length", opts.block_length ? json(*opts.block_length) : json("auto")},
              {"window_days", opts.window_days},
              {"climatology_scope", std::string(to_string(opts.climatology_scope))},
              {"pit_bins", opts.pit_bins},
              {"sweep", opts.sweep}};
  json params_cfg = json::array();
  for (const auto& [name, path] : opts.params) params_cfg.push_back({{"name", name}, {"path", path}});
  config["params"] = params_cfg;
  m.config = config;

  json report{{"schema_version", kReportSchemaVersion},
              {"software_version", kSoftwareVersion},
              {"cases", n},
              {"days", daily.days()},
              {"ensemble_size", k_members},
              {"group_sizes", data.groups.group_sizes},
              {"alpha", alpha},
              {"nominal_level", nominal_level},
              {"reference", reference_name},
              {"threshold_levels", levels.labels},
              {"bootstrap",
               {{"replicates", opts.bootstrap_replicates},
                {"level", boot_base.level},
                {"mean_block_length", block},
                {"unit", "valid day"},
                {"enabled", boot.enabled()}}},
              {"climatology", {{"window_days", opts.window_days},
                               {"scope", std::string(to_string(opts.climatology_scope))}}},
              {"models", jmodels}};

  emit(opts.out_dir, "report.json", report.dump(2) + "\n", m);
  emit(opts.out_dir, "pit.csv", pit_csv, m);
  emit(opts.out_dir, "rank.csv", rank_csv, m);
  emit(opts.out_dir, "thresholds.csv", levels.table, m);
  emit(opts.out_dir, "twcrps.csv", tw_csv, m);
  emit(opts.out_dir, "strata.csv", strata_csv, m);
  emit(opts.out_dir, "prob_negative.csv", neg_csv, m);
  if (!opts.sweep.empty()) emit(opts.out_dir, "threshold_sweep.csv", sweep_csv, m);
  m.timings["total_s"] = clock.seconds();
  write_manifest(join_path(opts.out_dir, "manifest.json"), m);
  return report;
}

// report

namespace {

double field(const json& j, const char* a, const char* b, const std::string& where) {
  try {
    return j.at(a).at(b).get<double>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": missing or invalid field " + a + "." + b);
  }
}

std::optional<double> optional_field(const json& j, const char* a, const char* b,
                                     const std::string& where) {
  try {
    const json& v = j.at(a).at(b);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": missing or invalid field " + a + "." + b);
  }
}

}  // namespace

json run_report(const ReportOptions& opts) {
  Stopwatch clock;
  if (opts.reports.empty()) throw ConfigError("report: at least one report is required");
  prepare_dir(opts.out_dir);
  Manifest m;
  m.command = "report";
  m.config = {{"reports", opts.reports}, {"with_baselines", opts.with_baselines}};

  json rows = json::array();
  std::string csv = "model,source,crps,mae,rmse,crpss,coverage,nominal_level,average_width\n";
  std::set<std::string> baselines_seen;
  for (const auto& path : opts.reports) {
    json rep;
    try {
      rep = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
      throw ConfigError(path + ": not valid JSON: " + e.what());
    }
    m.inputs[path] = file_digest(path);
    if (!rep.is_object() || !rep.contains("schema_version") ||
        rep["schema_version"] != kReportSchemaVersion || !rep.contains("models") ||
        !rep["models"].is_array()) {
      throw ConfigError(path + ": report schema mismatch (expected schema_version " +
                        std::to_string(kReportSchemaVersion) + ")");
    }
    for (const json& md : rep["models"]) {
      const std::string where = path;
      std::string name;
      bool baseline = false;
      try {
        name = md.at("name").get<std::string>();
        baseline = md.at("baseline").get<bool>();
      } catch (const json::exception&) {
        throw ConfigError(where + ": model entry without name or baseline flag");
      }
      if (baseline && (!opts.with_baselines || !baselines_seen.insert(name).second)) continue;
      const double crps = field(md, "crps", "mean", where);
      const double mae = field(md, "mae", "mean", where);
      const double rmse = field(md, "rmse", "value", where);
      const auto crpss = optional_field(md, "crpss", "value", where);
      const double coverage = field(md, "interval", "coverage", where);
      const double nominal = field(md, "interval", "nominal_level", where);
      const double width = field(md, "interval", "average_width", where);
      rows.push_back({{"model", name},
                      {"source", path},
                      {"crps", crps},
                      {"mae", mae},
                      {"rmse", rmse},
                      {"crpss", crpss ? json(*crpss) : json(nullptr)},
                      {"coverage", coverage},
                      {"nominal_level", nominal},
                      {"average_width", width}});
      csv += name + ',' + path + ',' + num(crps) + ',' + num(mae) + ',' + num(rmse) + ',' +
             num(crpss) + ',' + num(coverage) + ',' + num(nominal) + ',' + num(width) + '\n';
    }
  }
  json out{{"schema_version", kReportSchemaVersion}, {"rows", rows}};
  emit(opts.out_dir, "summary.json", out.dump(2) + "\n", m);
  emit(opts.out_dir, "summary.csv", csv, m);
  m.timings["total_s"] = clock.seconds();
  write_manifest(join_path(opts.out_dir, "manifest.json"), m);
  return out;
}

}  // namespace windemos::pipeline
