#include "windemos/forecast.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "windemos/errors.hpp"

namespace windemos {

std::size_t GroupSpec::members() const {
  return std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0});
}

void GroupSpec::validate() const {
  if (group_sizes.empty()) throw ValidationError("group spec: at least one group is required");
  for (std::size_t s : group_sizes) {
    if (s == 0) throw ValidationError("group spec: every group needs at least one member");
  }
}

std::int64_t EnsembleForecast::valid_day() const {
  // Floor division so that times before the epoch map to the right day.
  return valid_time >= 0 ? valid_time / 86400 : -((-valid_time + 86399) / 86400);
}

EnsembleStats ensemble_stats(std::span<const double> members, const GroupSpec& spec) {
  if (members.size() != spec.members()) {
    throw DomainError("ensemble_stats: " + std::to_string(members.size()) +
                      " members but the group spec describes " + std::to_string(spec.members()));
  }
  // Every sum runs over sorted values so that permuting members within a group
  // gives bit-identical statistics.
  EnsembleStats st;
  st.group_means.reserve(spec.groups());
  std::vector<double> group;
  std::size_t offset = 0;
  for (std::size_t size : spec.group_sizes) {
    group.assign(members.begin() + offset, members.begin() + offset + size);
    std::sort(group.begin(), group.end());
    st.group_means.push_back(std::accumulate(group.begin(), group.end(), 0.0) /
                             static_cast<double>(size));
    offset += size;
  }
  std::vector<double> all(members.begin(), members.end());
  std::sort(all.begin(), all.end());
  const double m = static_cast<double>(all.size());
  st.mean = std::accumulate(all.begin(), all.end(), 0.0) / m;
  double ss = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double d = all[i] - st.mean;
    ss += d * d;
    weighted += (2.0 * static_cast<double>(i + 1) - m - 1.0) * all[i];
  }
  st.variance = all.size() > 1 ? ss / (m - 1.0) : 0.0;
  st.mean_abs_diff = std::max(0.0, 2.0 * weighted / (m * m));
  return st;
}

EnsembleStats ensemble_stats(const EnsembleForecast& forecast, const GroupSpec& spec) {
  return ensemble_stats(forecast.members, spec);
}

std::string format_time(UnixTime t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

UnixTime parse_time(const std::string& text) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &s,
                  &consumed) != 6 ||
      consumed != 19) {
    throw DomainError("invalid RFC-3339 timestamp '" + text + "'");
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60 || h < 0 || mi < 0 || s < 0) {
    throw DomainError("invalid RFC-3339 timestamp '" + text + "'");
  }
  std::string rest = text.substr(19);
  if (!rest.empty() && rest[0] == '.') {
    std::size_t i = 1;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i == 1) throw DomainError("invalid RFC-3339 timestamp '" + text + "'");
    rest = rest.substr(i);
  }
  std::int64_t offset = 0;
  if (rest == "Z" || rest == "z") {
    offset = 0;
  } else if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-') && rest[3] == ':') {
    int oh = 0, om = 0;
    if (std::sscanf(rest.c_str() + 1, "%2d:%2d", &oh, &om) != 2 || oh > 23 || om > 59) {
      throw DomainError("invalid RFC-3339 offset in '" + text + "'");
    }
    offset = (rest[0] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
  } else {
    throw DomainError("RFC-3339 timestamp '" + text + "' lacks a UTC offset");
  }
  const auto secs = sys_days{ymd}.time_since_epoch().count() * 86400LL + h * 3600LL + mi * 60LL + s;
  return secs - offset;
}

}  // namespace windemos
