#include "windemos/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "windemos/errors.hpp"
#include "windemos/random.hpp"
#include "windemos/special_functions.hpp"

namespace windemos {
namespace {

constexpr double kTwoPi = 2.0 * special::kPi;

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

bool valid_station_id(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c != '"' && c != ',' && c != ' ' && c != '\t' && static_cast<unsigned char>(c) >= 0x20;
  });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string lines_list(const std::vector<std::size_t>& lines) {
  std::string s;
  const std::size_t shown = std::min<std::size_t>(lines.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) s += ", ";
    s += std::to_string(lines[i]);
  }
  if (lines.size() > shown) s += ", ...";
  return s;
}

}  // namespace

std::vector<std::string> Dataset::stations() const {
  std::set<std::string> s;
  for (const auto& f : forecasts) s.insert(f.station_id);
  return {s.begin(), s.end()};
}

std::vector<int> Dataset::lead_times() const {
  std::set<int> s;
  for (const auto& f : forecasts) s.insert(f.lead_time_h);
  return {s.begin(), s.end()};
}

void Dataset::validate() const {
  groups.validate();
  if (forecasts.size() != observations.size()) {
    throw ValidationError("dataset: forecast and observation counts differ");
  }
  std::set<std::tuple<std::string, UnixTime, int>> keys;
  const std::size_t m = groups.members();
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const auto& f = forecasts[i];
    if (f.members.size() != m) {
      throw ValidationError("dataset: case " + std::to_string(i) + " has " +
                            std::to_string(f.members.size()) + " members, expected " +
                            std::to_string(m));
    }
    for (double v : f.members) {
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError("dataset: case " + std::to_string(i) + " has a negative or non-finite member");
      }
    }
    if (!std::isfinite(observations[i]) || observations[i] < 0.0) {
      throw ValidationError("dataset: case " + std::to_string(i) + " has a negative or non-finite observation");
    }
    if (!keys.emplace(f.station_id, f.valid_time, f.lead_time_h).second) {
      throw ValidationError("dataset: duplicate key (" + f.station_id + ", " +
                            format_time(f.valid_time) + ", " + std::to_string(f.lead_time_h) + ")");
    }
  }
}

MissingPolicy missing_policy_from_string(const std::string& s) {
  if (s == "drop") return MissingPolicy::Drop;
  if (s == "strict") return MissingPolicy::Strict;
  throw ConfigError("unknown missing-data policy '" + s + "' (expected drop or strict)");
}

Dataset parse_dataset(const std::string& csv_text, const GroupSpec* groups, MissingPolicy policy) {
  std::istringstream in(csv_text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t member_count = 0;
  bool have_header = false;
  Dataset d;
  std::vector<std::size_t> malformed;
  std::vector<std::size_t> missing;
  std::vector<std::size_t> negative;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_commas(text);
    if (!have_header) {
      if (fields.size() < 5 || trim(fields[0]) != "station_id" || trim(fields[1]) != "valid_time" ||
          trim(fields[2]) != "lead_time_h" || trim(fields[3]) != "obs") {
        throw ParseError("line " + std::to_string(line_no) +
                             ": header must be station_id,valid_time,lead_time_h,obs,m_1,...,m_M",
                         {line_no});
      }
      for (std::size_t i = 4; i < fields.size(); ++i) {
        if (trim(fields[i]) != "m_" + std::to_string(i - 3)) {
          throw ParseError("line " + std::to_string(line_no) + ": member column " +
                               std::to_string(i - 3) + " must be named m_" + std::to_string(i - 3),
                           {line_no});
        }
      }
      member_count = fields.size() - 4;
      have_header = true;
      continue;
    }
    if (fields.size() != member_count + 4) {
      malformed.push_back(line_no);
      continue;
    }
    EnsembleForecast f;
    f.station_id = std::string(trim(fields[0]));
    bool bad = !valid_station_id(f.station_id);
    try {
      f.valid_time = parse_time(std::string(trim(fields[1])));
    } catch (const DomainError&) {
      bad = true;
    }
    const auto lead = parse_int(trim(fields[2]));
    if (!lead) bad = true;
    bool row_missing = false;
    bool row_negative = false;
    std::vector<double> values;
    values.reserve(member_count + 1);
    for (std::size_t i = 3; i < fields.size(); ++i) {
      const auto s = trim(fields[i]);
      if (is_missing(s)) {
        row_missing = true;
        values.push_back(0.0);
        continue;
      }
      const auto v = parse_double(s);
      if (!v) {
        bad = true;
        break;
      }
      if (*v < 0.0) row_negative = true;
      values.push_back(*v);
    }
    if (bad) {
      malformed.push_back(line_no);
      continue;
    }
    if (row_missing) {
      missing.push_back(line_no);
      continue;
    }
    if (row_negative) {
      negative.push_back(line_no);
      continue;
    }
    f.lead_time_h = *lead;
    d.observations.push_back(values[0]);
    f.members.assign(values.begin() + 1, values.end());
    d.forecasts.push_back(std::move(f));
  }

  if (!have_header) throw ValidationError("dataset is empty: no header");
  if (!malformed.empty()) {
    throw ParseError("malformed rows at lines " + lines_list(malformed), malformed);
  }
  if (!negative.empty()) {
    throw ValidationError("negative wind speed values at lines " + lines_list(negative));
  }
  if (!missing.empty() && policy == MissingPolicy::Strict) {
    throw ParseError("missing values at lines " + lines_list(missing), missing);
  }
  d.dropped_rows = missing.size();
  if (d.forecasts.empty()) throw ValidationError("dataset is empty: no usable data rows");
  d.groups = groups ? *groups : GroupSpec::single(member_count);
  if (d.groups.members() != member_count) {
    throw ValidationError("group spec describes " + std::to_string(d.groups.members()) +
                          " members but the file has " + std::to_string(member_count));
  }
  d.validate();
  return d;
}

Dataset load_dataset(const std::string& path, const std::optional<GroupSpec>& groups,
                     MissingPolicy policy) {
  const std::string text = read_file(path);
  if (groups) return parse_dataset(text, &*groups, policy);
  const std::string sidecar = groups_sidecar_path(path);
  if (std::ifstream(sidecar).good()) {
    const GroupSpec g = read_group_spec(sidecar);
    return parse_dataset(text, &g, policy);
  }
  return parse_dataset(text, nullptr, policy);
}

std::string to_csv(const Dataset& d) {
  std::string out = "station_id,valid_time,lead_time_h,obs";
  const std::size_t m = d.groups.members();
  for (std::size_t i = 1; i <= m; ++i) out += ",m_" + std::to_string(i);
  out += '\n';
  for (std::size_t i = 0; i < d.forecasts.size(); ++i) {
    const auto& f = d.forecasts[i];
    out += f.station_id;
    out += ',';
    out += format_time(f.valid_time);
    out += ',';
    out += std::to_string(f.lead_time_h);
    out += ',';
    out += format_value(d.observations[i]);
    for (double v : f.members) {
      out += ',';
      out += format_value(v);
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const std::string& path, const Dataset& d) {
  d.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << to_csv(d);
  if (!out) throw ValidationError("write failed for '" + path + "'");
  write_group_spec(groups_sidecar_path(path), d.groups);
}

std::string groups_sidecar_path(const std::string& data_path) { return data_path + ".groups.json"; }

GroupSpec read_group_spec(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("group spec '" + path + "': " + e.what());
  }
  if (!j.is_object() || !j.contains("group_sizes") || !j["group_sizes"].is_array()) {
    throw ConfigError("group spec '" + path + "' must be {\"group_sizes\":[...]}");
  }
  GroupSpec g;
  for (const auto& v : j["group_sizes"]) {
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      throw ConfigError("group spec '" + path + "': sizes must be positive integers");
    }
    g.group_sizes.push_back(v.get<std::size_t>());
  }
  try {
    g.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return g;
}

void write_group_spec(const std::string& path, const GroupSpec& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << nlohmann::json{{"group_sizes", g.group_sizes}}.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic data

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synthetic config: " + m); };
  if (!(scale > 0.0) || !std::isfinite(scale)) fail("scale must be positive");
  if ((truth == Family::Gev || truth == Family::Tgev) && !(shape > -0.5 && shape < 1.0)) {
    fail("shape must lie in ]-0.5, 1[");
  }
  if (!(base_max >= base_min)) fail("base_max must be >= base_min");
  if (!(ar_coefficient > -1.0 && ar_coefficient < 1.0)) fail("ar_coefficient must lie in ]-1, 1[");
  if (!(ar_sd >= 0.0) || !(station_bias_sd >= 0.0) || !(seasonal_amplitude >= 0.0)) {
    fail("standard deviations and amplitudes must be >= 0");
  }
  if (!(location_floor > 0.0)) fail("location_floor must be positive");
  if (!(dispersion > 0.0) || !std::isfinite(dispersion)) fail("dispersion must be positive");
  if (!std::isfinite(bias)) fail("bias must be finite");
  if (group_sizes.empty() || std::any_of(group_sizes.begin(), group_sizes.end(),
                                         [](std::size_t s) { return s == 0; })) {
    fail("group_sizes must be nonempty with positive entries");
  }
  if (stations < 1 || days < 1) fail("stations and days must be >= 1");
  if (stations > 99999) fail("at most 99999 stations");
  if (lead_time_h < 0) fail("lead_time_h must be >= 0");
  try {
    parse_time(start_date + "T00:00:00Z");
  } catch (const DomainError&) {
    fail("start_date must be YYYY-MM-DD");
  }
}

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
  j = nlohmann::json{{"truth", std::string(to_string(c.truth))},
                     {"scale", c.scale},
                     {"shape", c.shape},
                     {"base_min", c.base_min},
                     {"base_max", c.base_max},
                     {"seasonal_amplitude", c.seasonal_amplitude},
                     {"ar_coefficient", c.ar_coefficient},
                     {"ar_sd", c.ar_sd},
                     {"location_floor", c.location_floor},
                     {"bias", c.bias},
                     {"station_bias_sd", c.station_bias_sd},
                     {"dispersion", c.dispersion},
                     {"group_sizes", c.group_sizes},
                     {"control_member", c.control_member},
                     {"stations", c.stations},
                     {"days", c.days},
                     {"lead_time_h", c.lead_time_h},
                     {"start_date", c.start_date},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SyntheticConfig& c) {
  if (!j.is_object()) throw ConfigError("synthetic config must be a JSON object");
  static const std::set<std::string> known = {
      "truth", "scale", "shape", "base_min", "base_max", "seasonal_amplitude", "ar_coefficient",
      "ar_sd", "location_floor", "bias", "station_bias_sd", "dispersion", "group_sizes",
      "control_member", "stations", "days", "lead_time_h", "start_date", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("synthetic config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("truth")) c.truth = family_from_string(j.at("truth").get<std::string>());
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("scale", c.scale);
    get("shape", c.shape);
    get("base_min", c.base_min);
    get("base_max", c.base_max);
    get("seasonal_amplitude", c.seasonal_amplitude);
    get("ar_coefficient", c.ar_coefficient);
    get("ar_sd", c.ar_sd);
    get("location_floor", c.location_floor);
    get("bias", c.bias);
    get("station_bias_sd", c.station_bias_sd);
    get("dispersion", c.dispersion);
    get("group_sizes", c.group_sizes);
    get("control_member", c.control_member);
    get("stations", c.stations);
    get("days", c.days);
    get("lead_time_h", c.lead_time_h);
    get("start_date", c.start_date);
    get("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
}

Predictive synthetic_truth(const SyntheticConfig& c, double location) {
  switch (c.truth) {
    case Family::TruncNormal: return TruncNormal(location, c.scale);
    case Family::LogNormal: return LogNormal::from_moments(location, c.scale * c.scale);
    case Family::Gev: return Gev(location, c.scale, c.shape);
    case Family::Tgev: return Tgev(location, c.scale, c.shape);
  }
  throw ConfigError("unknown truth family");
}

Dataset generate_synthetic(const SyntheticConfig& c) {
  c.validate();
  Dataset d;
  d.groups = GroupSpec{c.group_sizes};
  const std::size_t m = d.groups.members();
  const UnixTime start = parse_time(c.start_date + "T00:00:00Z");
  const double innovation_sd = c.ar_sd * std::sqrt(1.0 - c.ar_coefficient * c.ar_coefficient);

  struct StationState {
    std::string id;
    double base;
    double bias;
    double anomaly;
    Rng rng;
  };
  std::vector<StationState> st;
  st.reserve(static_cast<std::size_t>(c.stations));
  for (int s = 0; s < c.stations; ++s) {
    Rng setup(derive_seed(c.seed, {static_cast<std::uint64_t>(s), 0}));
    char id[16];
    std::snprintf(id, sizeof id, "S%03d", s + 1);
    const double base = c.base_min + (c.base_max - c.base_min) * setup.uniform();
    const double bias = c.bias + c.station_bias_sd * special::std_normal_quantile(setup.uniform());
    const double anomaly = c.ar_sd * special::std_normal_quantile(setup.uniform());
    st.push_back({id, base, bias, anomaly, Rng(derive_seed(c.seed, {static_cast<std::uint64_t>(s), 1}))});
  }

  d.forecasts.reserve(static_cast<std::size_t>(c.days) * st.size());
  for (int day = 0; day < c.days; ++day) {
    const double season = c.seasonal_amplitude * std::sin(kTwoPi * day / 365.0);
    for (auto& s : st) {
      if (day > 0) {
        s.anomaly = c.ar_coefficient * s.anomaly +
                    innovation_sd * special::std_normal_quantile(s.rng.uniform());
      }
      const double location = std::max(c.location_floor, s.base + season + s.anomaly);
      const Predictive truth = synthetic_truth(c, location);
      const double obs = std::max(0.0, quantile(truth, s.rng.uniform()));
      EnsembleForecast f;
      f.station_id = s.id;
      f.valid_time = start + static_cast<UnixTime>(day) * 86400;
      f.lead_time_h = c.lead_time_h;
      f.members.reserve(m);
      const double center = location + s.bias;
      for (std::size_t i = 0; i < m; ++i) {
        if (i == 0 && c.control_member) {
          f.members.push_back(round6(std::max(0.0, center)));
          continue;
        }
        const double z = quantile(truth, s.rng.uniform());
        f.members.push_back(round6(std::max(0.0, center + c.dispersion * (z - location))));
      }
      d.forecasts.push_back(std::move(f));
      d.observations.push_back(round6(obs));
    }
  }
  return d;
}

}  // namespace windemos
