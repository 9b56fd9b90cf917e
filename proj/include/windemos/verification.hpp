#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "windemos/distributions.hpp"

namespace windemos {

/// A forecast to verify: a parametric predictive law or an empirical one
/// (raw ensemble, climatology).
class ForecastLaw {
 public:
  ForecastLaw(Predictive p) : law_(std::move(p)) {}  // NOLINT(implicit)
  ForecastLaw(EmpiricalEnsemble e) : law_(std::move(e)) {}  // NOLINT(implicit)

  bool is_empirical() const { return std::holds_alternative<EmpiricalEnsemble>(law_); }
  const Predictive* parametric() const { return std::get_if<Predictive>(&law_); }
  const EmpiricalEnsemble* empirical() const { return std::get_if<EmpiricalEnsemble>(&law_); }

  double cdf(double x) const;
  double quantile(double y) const;
  double mean() const;
  double median() const;
  double crps(double x) const;
  /// Threshold-weighted CRPS, weight 1{y >= r}.
  double twcrps(double x, double r) const;

 private:
  std::variant<Predictive, EmpiricalEnsemble> law_;
};

/// F(obs) of a parametric law.
double pit(const Predictive& p, double obs);
/// Uniform draw between F(obs-) and F(obs) of a step CDF.
double randomized_pit(const EmpiricalEnsemble& e, double obs, std::uint64_t seed);
/// PIT of any forecast law; the seed is used only for empirical laws.
double pit(const ForecastLaw& f, double obs, std::uint64_t seed);

struct PitHistogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};
/// Equal-width bins on [0, 1]; a value of exactly 1 falls into the last bin.
PitHistogram pit_histogram(std::span<const double> pit_values, std::size_t bins = 10);

/// Rank of obs among the members, 1..K+1; ties are broken uniformly at random.
int verification_rank(std::span<const double> members, double obs, std::uint64_t seed);

struct RankHistogram {
  std::size_t ensemble_size = 0;
  std::vector<std::size_t> counts;  // index r-1 holds rank r
  std::size_t total = 0;
};
RankHistogram rank_histogram(std::span<const int> ranks, std::size_t ensemble_size);

/// Default alpha = 2 / (K + 1), giving nominal level (K - 1) / (K + 1).
double nominal_alpha(std::size_t ensemble_size);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};
/// (quantile(alpha/2), quantile(1 - alpha/2)).
Interval central_interval(const ForecastLaw& f, double alpha);

struct IntervalStats {
  double nominal_level = 0.0;  // percent
  double coverage = 0.0;       // percent
  double average_width = 0.0;
  std::size_t count = 0;
};
/// Closed intervals: lower <= obs <= upper counts as covered.
IntervalStats coverage_and_width(std::span<const Interval> intervals,
                                 std::span<const double> observations, double nominal_level);

struct BootstrapOptions {
  int replicates = 2000;
  double level = 0.95;
  /// Unset means ceil(n^(1/3)).
  std::optional<double> mean_block_length;
  std::uint64_t seed = 0;
};

struct BootstrapCi {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;
  int replicates = 0;
  double mean_block_length = 0.0;
};

double default_block_length(std::size_t n);

/// Stationary-bootstrap percentile CI of the series mean.
BootstrapCi stationary_bootstrap_ci(std::span<const double> series, const BootstrapOptions& opts);
/// Percentile CI of 1 - mean(scores)/mean(reference) with paired resampling.
BootstrapCi stationary_bootstrap_skill_ci(std::span<const double> scores,
                                          std::span<const double> reference,
                                          const BootstrapOptions& opts);

/// Linear-interpolation (type 7) percentile, p in [0, 100].
double percentile(std::span<const double> values, double p);

struct Stratum {
  std::string name;  // low, medium, high
  double lower_cut = 0.0;
  double upper_cut = 0.0;
  std::size_t count = 0;
  /// False when fewer than two cases fall into the stratum.
  bool reported = false;
  double mean_score = 0.0;
  double mean_reference = 0.0;
  std::optional<double> skill;
};

/// Strata by ensemble mean: low (< p_lo), medium (p_lo..p_hi), high (> p_hi).
std::vector<Stratum> stratified_scores(std::span<const double> ensemble_means,
                                       std::span<const double> scores,
                                       std::span<const double> reference_scores,
                                       double lo_pct = 10.0, double hi_pct = 90.0);

struct ThresholdRow {
  double threshold = 0.0;
  double mean_twcrps = 0.0;
  double mean_twcrps_reference = 0.0;
  std::optional<double> skill;
};

std::vector<ThresholdRow> threshold_sweep(std::span<const ForecastLaw> forecasts,
                                          std::span<const double> observations,
                                          std::span<const double> thresholds,
                                          std::span<const ForecastLaw> reference);

struct TestResult {
  double statistic = 0.0;
  double p_value = 0.0;
};
/// One-sample Kolmogorov-Smirnov test against U(0, 1), asymptotic p-value.
TestResult ks_uniform_test(std::span<const double> values);
/// Pearson chi-square test of equal cell probabilities.
TestResult chi_square_uniform_test(std::span<const std::size_t> counts);

}  // namespace windemos
