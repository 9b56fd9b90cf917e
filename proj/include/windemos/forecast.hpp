#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace windemos {

/// Partition of the M ensemble members into K exchangeable groups. Members are
/// assigned positionally: the first group_sizes[0] members form group 1, etc.
struct GroupSpec {
  std::vector<std::size_t> group_sizes;

  static GroupSpec single(std::size_t members) { return GroupSpec{{members}}; }
  std::size_t groups() const { return group_sizes.size(); }
  std::size_t members() const;
  /// Throws ValidationError unless K >= 1 and every size is >= 1.
  void validate() const;
  bool operator==(const GroupSpec&) const = default;
};

/// Seconds since 1970-01-01T00:00:00Z.
using UnixTime = std::int64_t;

struct EnsembleForecast {
  std::string station_id;
  UnixTime valid_time = 0;
  int lead_time_h = 0;
  std::vector<double> members;

  /// UTC calendar day index of valid_time (days since the epoch).
  std::int64_t valid_day() const;
};

/// Summary statistics of one ensemble used by the link functions.
struct EnsembleStats {
  std::vector<double> group_means;
  double mean = 0.0;
  /// Sample variance with denominator M - 1 (0 for a single member).
  double variance = 0.0;
  /// (1/M^2) sum_i sum_j |f_i - f_j|.
  double mean_abs_diff = 0.0;
};

/// Throws DomainError when the member count does not match the spec.
EnsembleStats ensemble_stats(std::span<const double> members, const GroupSpec& spec);
EnsembleStats ensemble_stats(const EnsembleForecast& forecast, const GroupSpec& spec);

/// RFC-3339 UTC text, e.g. 2021-03-04T00:00:00Z.
std::string format_time(UnixTime t);
/// Parses RFC-3339 with a Z or numeric offset; throws DomainError on bad input.
UnixTime parse_time(const std::string& text);

}  // namespace windemos
