#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "windemos/errors.hpp"
#include "windemos/random.hpp"
#include "windemos/scoring.hpp"
#include "windemos/verification.hpp"

using namespace windemos;

TEST(Pit, ParametricExamples) {
  const Predictive tn = TruncNormal(5.0, 1.0);
  EXPECT_NEAR(pit(tn, median(tn)), 0.5, 1e-12);
  EXPECT_EQ(pit(Predictive(Tgev(1.0, 1.0, 0.1)), -0.5), 0.0);
  const Tgev t(1.0, 1.0, 0.1);
  EXPECT_EQ(pit(Predictive(t), 2.0), cdf(t, 2.0));
}

TEST(Pit, RandomizedForStepCdf) {
  const EmpiricalEnsemble e({1.0, 2.0, 2.0, 3.0});
  for (std::uint64_t s = 0; s < 50; ++s) {
    const double u = randomized_pit(e, 2.0, s);
    EXPECT_GE(u, 0.25);
    EXPECT_LE(u, 0.75);
    EXPECT_EQ(u, randomized_pit(e, 2.0, s));
  }
  EXPECT_EQ(randomized_pit(e, 2.5, 1), 0.75);
  EXPECT_EQ(pit(ForecastLaw(e), 2.5, 3), 0.75);
}

TEST(Pit, UniformUnderTruth) {
  const Predictive law = Tgev(1.5, 1.2, 0.15);
  const auto draws = sample(law, 77, 10000);
  std::vector<double> u;
  for (double x : draws) u.push_back(pit(law, x));
  EXPECT_GT(ks_uniform_test(u).p_value, 0.01);
  const auto h = pit_histogram(u, 10);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), h.total);
}

TEST(PitHistogram, EdgesAndEndpoint) {
  const std::vector<double> v{0.0, 0.05, 0.5, 0.99, 1.0};
  const auto h = pit_histogram(v, 4);
  ASSERT_EQ(h.edges.size(), 5u);
  for (std::size_t i = 1; i < h.edges.size(); ++i) EXPECT_LT(h.edges[i - 1], h.edges[i]);
  EXPECT_EQ(h.edges.front(), 0.0);
  EXPECT_EQ(h.edges.back(), 1.0);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 0, 1, 2}));
  EXPECT_THROW(pit_histogram(std::vector<double>{1.5}, 4), DomainError);
}

TEST(Rank, ExtremesAndTies) {
  const std::vector<double> m{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(verification_rank(m, 0.5, 1), 1);
  EXPECT_EQ(verification_rank(m, 9.0, 1), 5);
  EXPECT_EQ(verification_rank(m, 2.5, 1), 3);
  EXPECT_THROW(verification_rank(std::vector<double>{}, 1.0, 1), DomainError);

  // obs equal to all three identical members: uniform over {1, 2, 3, 4}
  const std::vector<double> same(3, 2.0);
  std::vector<int> ranks;
  for (std::uint64_t s = 0; s < 10000; ++s) ranks.push_back(verification_rank(same, 2.0, derive_seed(9, {s})));
  const auto h = rank_histogram(ranks, 3);
  EXPECT_EQ(h.total, 10000u);
  EXPECT_GT(chi_square_uniform_test(h.counts).p_value, 0.01);
}

TEST(Rank, UniformWhenExchangeable) {
  const Predictive law = LogNormal(1.0, 0.5);
  const auto draws = sample(law, 5, 12 * 10000);
  std::vector<int> ranks;
  for (std::size_t c = 0; c < 10000; ++c) {
    std::vector<double> members(draws.begin() + 12 * c, draws.begin() + 12 * c + 11);
    ranks.push_back(verification_rank(members, draws[12 * c + 11], c));
  }
  const auto h = rank_histogram(ranks, 11);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), h.total);
  EXPECT_GT(chi_square_uniform_test(h.counts).p_value, 0.01);
}

TEST(Intervals, NominalLevels) {
  EXPECT_NEAR(100.0 * (1.0 - nominal_alpha(8)), 77.78, 0.005);
  EXPECT_NEAR(100.0 * (1.0 - nominal_alpha(11)), 83.33, 0.005);
  EXPECT_NEAR(100.0 * (1.0 - nominal_alpha(50)), 96.08, 0.005);
  EXPECT_THROW(nominal_alpha(1), DomainError);
}

TEST(Intervals, CentralIntervalShapes) {
  const auto iv = central_interval(ForecastLaw(Predictive(TruncNormal(20.0, 1.0))), 0.2);
  EXPECT_NEAR(20.0 - iv.lower, iv.upper - 20.0, 1e-9);
  const EmpiricalEnsemble e({3.0, 1.0, 2.0, 5.0, 4.0});
  const auto ev = central_interval(ForecastLaw(e), nominal_alpha(5));
  EXPECT_EQ(ev.lower, 1.0);
  EXPECT_EQ(ev.upper, 5.0);
  EXPECT_THROW(central_interval(ForecastLaw(e), 1.0), DomainError);
}

TEST(Intervals, CoverageAndWidth) {
  const std::vector<Interval> iv{{0.0, 1.0}, {1.0, 3.0}};
  const std::vector<double> in{0.5, 3.0};
  const auto s = coverage_and_width(iv, in, 50.0);
  EXPECT_EQ(s.coverage, 100.0);
  EXPECT_EQ(s.average_width, 1.5);
  const std::vector<Interval> point{{1.0, 1.0}, {2.0, 2.0}};
  const std::vector<double> off{1.5, 0.0};
  const auto z = coverage_and_width(point, off, 50.0);
  EXPECT_EQ(z.coverage, 0.0);
  EXPECT_EQ(z.average_width, 0.0);
  EXPECT_THROW(coverage_and_width(iv, std::vector<double>{1.0}, 50.0), DomainError);
}

TEST(Intervals, CalibratedCoverageNearNominal) {
  const Predictive law = Tgev(0.8, 1.1, -0.1);
  const auto obs = sample(law, 202, 10000);
  const double alpha = nominal_alpha(11);
  const auto iv = central_interval(ForecastLaw(law), alpha);
  std::vector<Interval> ivs(obs.size(), iv);
  const auto s = coverage_and_width(ivs, obs, 100.0 * (1.0 - alpha));
  EXPECT_NEAR(s.coverage, s.nominal_level, 2.0);
}

TEST(Percentile, Type7) {
  const std::vector<double> v{5.0, 1.0, 4.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(percentile(v, 25.0), 2.0);
  EXPECT_DOUBLE_EQ(percentile(v, 10.0), 1.4);
  EXPECT_DOUBLE_EQ(percentile(v, 100.0), 5.0);
  EXPECT_DOUBLE_EQ(percentile(v, 0.0), 1.0);
  EXPECT_THROW(percentile(std::vector<double>{}, 50.0), DomainError);
}

namespace {

std::vector<double> normal_series(std::size_t n, std::uint64_t seed, double rho = 0.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> out(n);
  double prev = z(gen);
  const double innov = std::sqrt(1.0 - rho * rho);
  for (auto& v : out) {
    prev = rho * prev + innov * z(gen);
    v = prev;
  }
  return out;
}

}  // namespace

TEST(Bootstrap, ConstantSeriesGivesZeroWidth) {
  const std::vector<double> c(50, 2.5);
  const auto ci = stationary_bootstrap_ci(c, {});
  EXPECT_EQ(ci.lower, 2.5);
  EXPECT_EQ(ci.upper, 2.5);
  EXPECT_EQ(ci.estimate, 2.5);
}

TEST(Bootstrap, IidNormalMatchesTheory) {
  const auto x = normal_series(500, 31);
  BootstrapOptions o;
  o.seed = 4;
  const auto ci = stationary_bootstrap_ci(x, o);
  const double half = 0.5 * (ci.upper - ci.lower);
  EXPECT_NEAR(half, 1.96 / std::sqrt(500.0), 0.25 * 1.96 / std::sqrt(500.0));
  EXPECT_LE(ci.lower, ci.estimate);
  EXPECT_GE(ci.upper, ci.estimate);
  EXPECT_EQ(ci.replicates, 2000);
  EXPECT_EQ(ci.mean_block_length, 8.0);
}

TEST(Bootstrap, DependentSeriesWiderThanIid) {
  BootstrapOptions o;
  o.seed = 8;
  o.mean_block_length = 10.0;
  const auto ar = stationary_bootstrap_ci(normal_series(500, 41, 0.5), o);
  const auto iid = stationary_bootstrap_ci(normal_series(500, 41, 0.0), o);
  EXPECT_GT(ar.upper - ar.lower, iid.upper - iid.lower);
}

TEST(Bootstrap, DeterministicAndValidated) {
  const auto x = normal_series(100, 3);
  BootstrapOptions o;
  o.seed = 99;
  const auto a = stationary_bootstrap_ci(x, o);
  const auto b = stationary_bootstrap_ci(x, o);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
  EXPECT_THROW(stationary_bootstrap_ci(std::vector<double>(9, 1.0), o), DomainError);
}

TEST(Bootstrap, SkillCiBracketsEstimate) {
  const auto a = normal_series(200, 1);
  const auto b = normal_series(200, 2);
  std::vector<double> s, r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.push_back(1.0 + 0.1 * std::fabs(a[i]));
    r.push_back(1.2 + 0.1 * std::fabs(b[i]));
  }
  BootstrapOptions o;
  o.replicates = 500;
  const auto ci = stationary_bootstrap_skill_ci(s, r, o);
  EXPECT_LE(ci.lower, ci.estimate);
  EXPECT_GE(ci.upper, ci.estimate);
  EXPECT_GT(ci.estimate, 0.0);
  const auto same = stationary_bootstrap_skill_ci(s, s, o);
  EXPECT_EQ(same.estimate, 0.0);
  EXPECT_EQ(same.lower, 0.0);
  EXPECT_EQ(same.upper, 0.0);
}

TEST(Strata, IdenticalMeansLeaveOuterStrataEmpty) {
  const std::vector<double> m(20, 4.0), s(20, 1.0), r(20, 2.0);
  const auto st = stratified_scores(m, s, r);
  ASSERT_EQ(st.size(), 3u);
  EXPECT_EQ(st[0].count, 0u);
  EXPECT_FALSE(st[0].reported);
  EXPECT_EQ(st[1].count, 20u);
  EXPECT_EQ(st[2].count, 0u);
  EXPECT_DOUBLE_EQ(*st[1].skill, 0.5);
}

TEST(Strata, UniformMeansSplitTenEightyTen) {
  std::vector<double> m, s, r;
  for (int i = 1; i <= 100; ++i) {
    m.push_back(i);
    s.push_back(0.01 * i);
    r.push_back(1.0);
  }
  const auto st = stratified_scores(m, s, r);
  EXPECT_EQ(st[0].count, 10u);
  EXPECT_EQ(st[1].count, 80u);
  EXPECT_EQ(st[2].count, 10u);
  // hand-filtered recomputation of the high stratum
  double hi = 0.0;
  for (int i = 91; i <= 100; ++i) hi += 0.01 * i;
  EXPECT_NEAR(st[2].mean_score, hi / 10.0, 1e-14);
}

TEST(Strata, RecombineToOverallMean) {
  std::mt19937_64 gen(21);
  std::gamma_distribution<double> g(2.0, 2.0);
  std::vector<double> m(997), s(997), r(997);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = g(gen);
    s[i] = 0.3 * m[i] + g(gen) * 0.1;
    r[i] = s[i] * 1.2;
  }
  const auto st = stratified_scores(m, s, r);
  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto& x : st) {
    weighted += x.mean_score * static_cast<double>(x.count);
    n += x.count;
  }
  EXPECT_EQ(n, m.size());
  EXPECT_NEAR(weighted / n, std::accumulate(s.begin(), s.end(), 0.0) / s.size(), 1e-10);
}

TEST(ThresholdSweep, SelfReferenceAndLowThreshold) {
  std::vector<ForecastLaw> f, ref;
  std::vector<double> obs;
  const auto draws = sample(Predictive(Tgev(3.0, 1.0, 0.1)), 3, 40);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    f.emplace_back(Predictive(Tgev(2.5 + 0.02 * i, 1.1, 0.1)));
    ref.emplace_back(Predictive(TruncNormal(3.0, 1.5)));
    obs.push_back(draws[i]);
  }
  const std::vector<double> grid{-1.0, 3.0, 5.0};
  for (const auto& row : threshold_sweep(f, obs, grid, f)) EXPECT_NEAR(*row.skill, 0.0, 1e-15);

  const auto rows = threshold_sweep(f, obs, grid, ref);
  double c = 0.0, cr = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    c += f[i].crps(obs[i]);
    cr += ref[i].crps(obs[i]);
  }
  EXPECT_NEAR(*rows[0].skill, 1.0 - c / cr, 1e-7);
  // per-case recomputation at r = 3
  double tw = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) tw += f[i].twcrps(obs[i], 3.0);
  EXPECT_DOUBLE_EQ(rows[1].mean_twcrps, tw / obs.size());
  EXPECT_THROW(threshold_sweep(f, obs, std::vector<double>{}, ref), DomainError);
}

TEST(Tests, KsAndChiSquare) {
  std::vector<double> u;
  for (int i = 0; i < 1000; ++i) u.push_back((i + 0.5) / 1000.0);
  EXPECT_GT(ks_uniform_test(u).p_value, 0.99);
  std::vector<double> skew;
  for (double x : u) skew.push_back(x * x);
  EXPECT_LT(ks_uniform_test(skew).p_value, 1e-6);

  const std::vector<std::size_t> counts{10, 20, 30};
  const auto chi = chi_square_uniform_test(counts);
  EXPECT_DOUBLE_EQ(chi.statistic, 10.0);
  EXPECT_NEAR(chi.p_value, std::exp(-5.0), 1e-12);
}
