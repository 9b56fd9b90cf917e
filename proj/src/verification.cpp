#include "windemos/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "windemos/errors.hpp"
#include "windemos/random.hpp"
#include "windemos/scoring.hpp"

namespace windemos {

double ForecastLaw::cdf(double x) const {
  if (const auto* e = empirical()) return windemos::cdf(*e, x);
  return windemos::cdf(*parametric(), x);
}

double ForecastLaw::quantile(double y) const {
  if (const auto* e = empirical()) return windemos::quantile(*e, y);
  return windemos::quantile(*parametric(), y);
}

double ForecastLaw::mean() const {
  if (const auto* e = empirical()) return windemos::mean(*e);
  return windemos::mean(*parametric());
}

double ForecastLaw::median() const {
  if (const auto* e = empirical()) return windemos::median(*e);
  return windemos::median(*parametric());
}

double ForecastLaw::crps(double x) const {
  if (const auto* e = empirical()) return windemos::crps(*e, x);
  return windemos::crps(*parametric(), x);
}

double ForecastLaw::twcrps(double x, double r) const {
  if (const auto* e = empirical()) return windemos::twcrps(*e, x, r);
  return windemos::twcrps(*parametric(), x, r);
}

double pit(const Predictive& p, double obs) { return cdf(p, obs); }

double randomized_pit(const EmpiricalEnsemble& e, double obs, std::uint64_t seed) {
  const double hi = cdf(e, obs);
  const double lo = cdf_left(e, obs);
  if (hi == lo) return hi;
  Rng rng(seed);
  return lo + (hi - lo) * rng.uniform();
}

double pit(const ForecastLaw& f, double obs, std::uint64_t seed) {
  if (const auto* e = f.empirical()) return randomized_pit(*e, obs, seed);
  return pit(*f.parametric(), obs);
}

PitHistogram pit_histogram(std::span<const double> pit_values, std::size_t bins) {
  if (bins == 0) throw DomainError("pit_histogram: at least one bin is required");
  PitHistogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : pit_values) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("pit_histogram: value outside [0, 1]");
    const auto b = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
    ++h.counts[b];
  }
  h.total = pit_values.size();
  return h;
}

int verification_rank(std::span<const double> members, double obs, std::uint64_t seed) {
  if (members.empty()) throw DomainError("verification_rank: no members");
  std::size_t below = 0;
  std::size_t ties = 0;
  for (double m : members) {
    if (m < obs) {
      ++below;
    } else if (m == obs) {
      ++ties;
    }
  }
  std::size_t extra = 0;
  if (ties > 0) {
    Rng rng(seed);
    extra = static_cast<std::size_t>(rng.below(ties + 1));
  }
  return static_cast<int>(below + extra + 1);
}

RankHistogram rank_histogram(std::span<const int> ranks, std::size_t ensemble_size) {
  RankHistogram h;
  h.ensemble_size = ensemble_size;
  h.counts.assign(ensemble_size + 1, 0);
  for (int r : ranks) {
    if (r < 1 || static_cast<std::size_t>(r) > ensemble_size + 1) {
      throw DomainError("rank_histogram: rank out of range");
    }
    ++h.counts[static_cast<std::size_t>(r - 1)];
  }
  h.total = ranks.size();
  return h;
}

double nominal_alpha(std::size_t ensemble_size) {
  if (ensemble_size < 2) throw DomainError("nominal_alpha: needs at least two members");
  return 2.0 / (static_cast<double>(ensemble_size) + 1.0);
}

Interval central_interval(const ForecastLaw& f, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("central_interval: alpha must lie in ]0,1[");
  return {f.quantile(0.5 * alpha), f.quantile(1.0 - 0.5 * alpha)};
}

IntervalStats coverage_and_width(std::span<const Interval> intervals,
                                 std::span<const double> observations, double nominal_level) {
  if (intervals.size() != observations.size()) {
    throw DomainError("coverage_and_width: length mismatch");
  }
  if (intervals.empty()) throw DomainError("coverage_and_width: no cases");
  std::size_t inside = 0;
  double width = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& iv = intervals[i];
    if (observations[i] >= iv.lower && observations[i] <= iv.upper) ++inside;
    width += iv.upper - iv.lower;
  }
  const double n = static_cast<double>(intervals.size());
  return {nominal_level, 100.0 * static_cast<double>(inside) / n, width / n, intervals.size()};
}

double default_block_length(std::size_t n) { return std::ceil(std::cbrt(static_cast<double>(n))); }

namespace {

constexpr std::size_t kMinBootstrapLength = 10;

// Indices of one stationary-bootstrap resample: blocks start uniformly at
// random and have geometric lengths with the given mean, wrapping circularly.
void resample_indices(std::size_t n, double mean_block, Rng& rng, std::vector<std::size_t>& idx) {
  const double p_new = 1.0 / mean_block;
  idx.resize(n);
  std::size_t cur = static_cast<std::size_t>(rng.below(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      cur = rng.bernoulli(p_new) ? static_cast<std::size_t>(rng.below(n)) : (cur + 1) % n;
    }
    idx[i] = cur;
  }
}

BootstrapCi percentile_ci(double estimate, std::vector<double>& stats, const BootstrapOptions& o,
                          double block) {
  std::sort(stats.begin(), stats.end());
  const double tail = 50.0 * (1.0 - o.level);
  BootstrapCi ci;
  ci.estimate = estimate;
  ci.lower = std::min(estimate, percentile(stats, tail));
  ci.upper = std::max(estimate, percentile(stats, 100.0 - tail));
  ci.level = o.level;
  ci.replicates = o.replicates;
  ci.mean_block_length = block;
  return ci;
}

void check_options(std::size_t n, const BootstrapOptions& o) {
  if (n < kMinBootstrapLength) throw DomainError("bootstrap: series needs at least 10 values");
  if (o.replicates < 1) throw DomainError("bootstrap: replicates must be >= 1");
  if (!(o.level > 0.0 && o.level < 1.0)) throw DomainError("bootstrap: level must lie in ]0,1[");
  if (o.mean_block_length && !(*o.mean_block_length >= 1.0)) {
    throw DomainError("bootstrap: mean block length must be >= 1");
  }
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

BootstrapCi stationary_bootstrap_ci(std::span<const double> series, const BootstrapOptions& o) {
  check_options(series.size(), o);
  const std::size_t n = series.size();
  const double block = o.mean_block_length.value_or(default_block_length(n));
  std::vector<double> stats(static_cast<std::size_t>(o.replicates));
  std::vector<std::size_t> idx;
  for (int r = 0; r < o.replicates; ++r) {
    Rng rng(derive_seed(o.seed, {static_cast<std::uint64_t>(r)}));
    resample_indices(n, block, rng, idx);
    double s = 0.0;
    for (std::size_t i : idx) s += series[i];
    stats[static_cast<std::size_t>(r)] = s / static_cast<double>(n);
  }
  return percentile_ci(mean_of(series), stats, o, block);
}

BootstrapCi stationary_bootstrap_skill_ci(std::span<const double> scores,
                                          std::span<const double> reference,
                                          const BootstrapOptions& o) {
  if (scores.size() != reference.size()) throw DomainError("bootstrap skill: length mismatch");
  check_options(scores.size(), o);
  const std::size_t n = scores.size();
  const double block = o.mean_block_length.value_or(default_block_length(n));
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(o.replicates));
  std::vector<std::size_t> idx;
  for (int r = 0; r < o.replicates; ++r) {
    Rng rng(derive_seed(o.seed, {static_cast<std::uint64_t>(r)}));
    resample_indices(n, block, rng, idx);
    double s = 0.0;
    double ref = 0.0;
    for (std::size_t i : idx) {
      s += scores[i];
      ref += reference[i];
    }
    if (ref > 0.0) stats.push_back(1.0 - s / ref);
  }
  if (stats.empty()) throw DomainError("bootstrap skill: reference score is zero in every replicate");
  BootstrapOptions eff = o;
  return percentile_ci(skill_score(mean_of(scores), mean_of(reference)), stats, eff, block);
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw DomainError("percentile: no values");
  if (!(p >= 0.0 && p <= 100.0)) throw DomainError("percentile: p must lie in [0, 100]");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

std::vector<Stratum> stratified_scores(std::span<const double> ensemble_means,
                                       std::span<const double> scores,
                                       std::span<const double> reference_scores, double lo_pct,
                                       double hi_pct) {
  if (ensemble_means.empty()) throw DomainError("stratified_scores: no cases");
  if (scores.size() != ensemble_means.size() || reference_scores.size() != ensemble_means.size()) {
    throw DomainError("stratified_scores: length mismatch");
  }
  if (!(lo_pct <= hi_pct)) throw DomainError("stratified_scores: lower cut above upper cut");
  const double lo = percentile(ensemble_means, lo_pct);
  const double hi = percentile(ensemble_means, hi_pct);
  std::vector<Stratum> out(3);
  out[0].name = "low";
  out[1].name = "medium";
  out[2].name = "high";
  for (auto& s : out) {
    s.lower_cut = lo;
    s.upper_cut = hi;
  }
  for (std::size_t i = 0; i < ensemble_means.size(); ++i) {
    const double m = ensemble_means[i];
    Stratum& s = m < lo ? out[0] : (m > hi ? out[2] : out[1]);
    ++s.count;
    s.mean_score += scores[i];
    s.mean_reference += reference_scores[i];
  }
  for (auto& s : out) {
    if (s.count > 0) {
      s.mean_score /= static_cast<double>(s.count);
      s.mean_reference /= static_cast<double>(s.count);
    }
    s.reported = s.count >= 2;
    if (s.reported && s.mean_reference > 0.0) s.skill = skill_score(s.mean_score, s.mean_reference);
  }
  return out;
}

std::vector<ThresholdRow> threshold_sweep(std::span<const ForecastLaw> forecasts,
                                          std::span<const double> observations,
                                          std::span<const double> thresholds,
                                          std::span<const ForecastLaw> reference) {
  if (thresholds.empty()) throw DomainError("threshold_sweep: no thresholds");
  if (forecasts.size() != observations.size() || reference.size() != observations.size()) {
    throw DomainError("threshold_sweep: length mismatch");
  }
  if (observations.empty()) throw DomainError("threshold_sweep: no cases");
  std::vector<ThresholdRow> rows;
  const double n = static_cast<double>(observations.size());
  for (double r : thresholds) {
    ThresholdRow row;
    row.threshold = r;
    for (std::size_t i = 0; i < observations.size(); ++i) {
      row.mean_twcrps += forecasts[i].twcrps(observations[i], r);
      row.mean_twcrps_reference += reference[i].twcrps(observations[i], r);
    }
    row.mean_twcrps /= n;
    row.mean_twcrps_reference /= n;
    if (row.mean_twcrps_reference > 0.0) {
      row.skill = skill_score(row.mean_twcrps, row.mean_twcrps_reference);
    }
    rows.push_back(row);
  }
  return rows;
}

TestResult ks_uniform_test(std::span<const double> values) {
  if (values.empty()) throw DomainError("ks_uniform_test: no values");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double u = std::clamp(s[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
  }
  // Kolmogorov limiting distribution with Stephens' small-sample correction.
  const double sqrt_n = std::sqrt(n);
  const double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  double p = 0.0;
  if (lambda < 0.2) {
    p = 1.0;
  } else {
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
      p += term;
      if (std::fabs(term) < 1e-16) break;
      sign = -sign;
    }
    p = std::clamp(2.0 * p, 0.0, 1.0);
  }
  return {d, p};
}

TestResult chi_square_uniform_test(std::span<const std::size_t> counts) {
  if (counts.size() < 2) throw DomainError("chi_square_uniform_test: needs at least two cells");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total <= 0.0) throw DomainError("chi_square_uniform_test: no observations");
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (std::size_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

}  // namespace windemos
