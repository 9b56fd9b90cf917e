#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "windemos/dataio.hpp"
#include "windemos/errors.hpp"
#include "windemos/forecast.hpp"
#include "windemos/scoring.hpp"
#include "windemos/verification.hpp"

using namespace windemos;

namespace {

const char* kHeader = "station_id,valid_time,lead_time_h,obs,m_1,m_2,m_3\n";

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "windemos_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

SyntheticConfig small_config() {
  SyntheticConfig c;
  c.stations = 3;
  c.days = 40;
  return c;
}

}  // namespace

TEST(EnsembleStats, HandExamples) {
  const std::vector<double> two{0.0, 2.0};
  const auto s = ensemble_stats(two, GroupSpec::single(2));
  EXPECT_DOUBLE_EQ(s.mean, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_abs_diff, 1.0);
  EXPECT_DOUBLE_EQ(s.variance, 2.0);

  const std::vector<double> same(5, 3.25);
  const auto c = ensemble_stats(same, GroupSpec::single(5));
  EXPECT_EQ(c.variance, 0.0);
  EXPECT_EQ(c.mean_abs_diff, 0.0);
  EXPECT_EQ(c.mean, 3.25);
}

TEST(EnsembleStats, GroupMeansOfElevenMembers) {
  std::vector<double> m{9.0};
  for (int i = 1; i <= 10; ++i) m.push_back(i);
  const auto s = ensemble_stats(m, GroupSpec{{1, 10}});
  ASSERT_EQ(s.group_means.size(), 2u);
  EXPECT_DOUBLE_EQ(s.group_means[0], 9.0);
  EXPECT_DOUBLE_EQ(s.group_means[1], 5.5);
  EXPECT_DOUBLE_EQ(s.mean, 64.0 / 11.0);
}

TEST(EnsembleStats, SizeMismatchIsDomainError) {
  const std::vector<double> m{1.0, 2.0, 3.0};
  EXPECT_THROW(ensemble_stats(m, GroupSpec{{1, 3}}), DomainError);
}

TEST(EnsembleStats, MdZeroOnlyForEqualMembers) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int r = 0; r < 200; ++r) {
    std::vector<double> m(6);
    for (auto& v : m) v = u(gen);
    const auto s = ensemble_stats(m, GroupSpec::single(6));
    EXPECT_GT(s.mean_abs_diff, 0.0);
    EXPECT_GE(s.variance, 0.0);
  }
}

TEST(EnsembleStats, PermutationWithinGroupIsBitIdentical) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 15.0);
  const GroupSpec spec{{2, 9}};
  for (int r = 0; r < 100; ++r) {
    std::vector<double> m(11);
    for (auto& v : m) v = u(gen);
    const auto a = ensemble_stats(m, spec);
    std::shuffle(m.begin() + 2, m.end(), gen);
    std::swap(m[0], m[1]);
    const auto b = ensemble_stats(m, spec);
    EXPECT_EQ(a.group_means, b.group_means);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.variance, b.variance);
    EXPECT_EQ(a.mean_abs_diff, b.mean_abs_diff);
  }
}

TEST(Time, FormatAndParse) {
  EXPECT_EQ(format_time(0), "1970-01-01T00:00:00Z");
  const UnixTime t = parse_time("2021-03-04T06:00:00Z");
  EXPECT_EQ(format_time(t), "2021-03-04T06:00:00Z");
  EXPECT_EQ(parse_time("2021-03-04T08:00:00+02:00"), t);
  EXPECT_EQ(parse_time("2021-03-04T06:00:00.000Z"), t);
  EXPECT_THROW(parse_time("2021-13-04T06:00:00Z"), DomainError);
  EXPECT_THROW(parse_time("yesterday"), DomainError);
  EnsembleForecast f;
  f.valid_time = parse_time("1969-12-31T23:00:00Z");
  EXPECT_EQ(f.valid_day(), -1);
}

TEST(ParseDataset, HeaderOnlyIsEmptyDatasetError) {
  EXPECT_THROW(parse_dataset(kHeader, nullptr), ValidationError);
  EXPECT_THROW(parse_dataset("", nullptr), ValidationError);
}

TEST(ParseDataset, OneValidRow) {
  const auto d = parse_dataset(std::string(kHeader) + "A,2021-01-01T00:00:00Z,24,3.5,1,2,3\n", nullptr);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.forecasts[0].station_id, "A");
  EXPECT_EQ(d.observations[0], 3.5);
  EXPECT_EQ(d.groups, GroupSpec::single(3));
}

TEST(ParseDataset, WrongHeaderIsParseError) {
  EXPECT_THROW(parse_dataset("station,valid_time,lead,obs,m_1\nA,2021-01-01T00:00:00Z,24,1,1\n", nullptr),
               ParseError);
}

TEST(ParseDataset, NegativeValueIsValidationError) {
  EXPECT_THROW(parse_dataset(std::string(kHeader) + "A,2021-01-01T00:00:00Z,24,3.5,1,-2,3\n", nullptr),
               ValidationError);
}

TEST(ParseDataset, MissingValuesDroppedOrRejected) {
  const std::string text = std::string(kHeader) +
                           "A,2021-01-01T00:00:00Z,24,3.5,1,2,3\n"
                           "A,2021-01-02T00:00:00Z,24,NA,1,2,3\n"
                           "A,2021-01-03T00:00:00Z,24,2.0,1,,3\n";
  const auto d = parse_dataset(text, nullptr, MissingPolicy::Drop);
  EXPECT_EQ(d.size(), 1u);
  EXPECT_EQ(d.dropped_rows, 2u);
  try {
    parse_dataset(text, nullptr, MissingPolicy::Strict);
    FAIL() << "strict mode accepted missing values";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.lines(), (std::vector<std::size_t>{3, 4}));
  }
}

TEST(ParseDataset, DuplicateKeyRejected) {
  const std::string text = std::string(kHeader) +
                           "A,2021-01-01T00:00:00Z,24,3.5,1,2,3\n"
                           "A,2021-01-01T00:00:00Z,24,3.0,1,2,3\n";
  EXPECT_THROW(parse_dataset(text, nullptr), ValidationError);
}

TEST(ParseDataset, MalformedRowsListedByLine) {
  SyntheticConfig c;
  c.stations = 4;
  c.days = 25;
  std::string text = to_csv(generate_synthetic(c));
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  ASSERT_EQ(lines.size(), 101u);  // header + 100 rows
  lines[10] = "S001,not-a-time,24,1,1,1,1,1,1,1,1,1,1,1,1";
  lines[50] += ",7.0";
  lines[90] = "S002,2021-02-01T00:00:00Z,24,abc,1,1,1,1,1,1,1,1,1,1,1";
  std::string bad;
  for (const auto& l : lines) bad += l + "\n";
  try {
    parse_dataset(bad, nullptr, MissingPolicy::Strict);
    FAIL() << "malformed rows accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.lines(), (std::vector<std::size_t>{11, 51, 91}));
  }
}

TEST(Dataset, SaveLoadRoundtripIsIdentity) {
  const Dataset d = generate_synthetic(small_config());
  const std::string path = temp_path("roundtrip.csv");
  save_dataset(path, d);
  const Dataset back = load_dataset(path);
  EXPECT_EQ(back.groups, d.groups);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.forecasts[i].station_id, d.forecasts[i].station_id);
    EXPECT_EQ(back.forecasts[i].valid_time, d.forecasts[i].valid_time);
    EXPECT_EQ(back.forecasts[i].lead_time_h, d.forecasts[i].lead_time_h);
    EXPECT_EQ(back.forecasts[i].members, d.forecasts[i].members);
    EXPECT_EQ(back.observations[i], d.observations[i]);
  }
  EXPECT_EQ(to_csv(back), to_csv(d));
}

TEST(Dataset, ExplicitGroupSpecOverridesSidecar) {
  const Dataset d = generate_synthetic(small_config());
  const std::string path = temp_path("groups.csv");
  save_dataset(path, d);
  const Dataset one = load_dataset(path, GroupSpec::single(11));
  EXPECT_EQ(one.groups, GroupSpec::single(11));
  EXPECT_THROW(load_dataset(path, GroupSpec{{1, 9}}), ValidationError);
}

TEST(Synthetic, DeterministicUnderSeed) {
  EXPECT_EQ(to_csv(generate_synthetic(small_config())), to_csv(generate_synthetic(small_config())));
  SyntheticConfig other = small_config();
  other.seed += 1;
  EXPECT_NE(to_csv(generate_synthetic(small_config())), to_csv(generate_synthetic(other)));
}

TEST(Synthetic, ShapeAndValues) {
  SyntheticConfig c;
  c.stations = 10;
  c.days = 400;
  const Dataset d = generate_synthetic(c);
  EXPECT_EQ(d.size(), 4000u);
  EXPECT_EQ(d.groups.members(), 11u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_TRUE(std::isfinite(d.observations[i]) && d.observations[i] >= 0.0);
    for (double v : d.forecasts[i].members) ASSERT_TRUE(std::isfinite(v) && v >= 0.0);
  }
  for (Family f : {Family::TruncNormal, Family::LogNormal, Family::Gev}) {
    c.truth = f;
    c.days = 50;
    const Dataset g = generate_synthetic(c);
    for (double o : g.observations) ASSERT_GE(o, 0.0);
  }
}

TEST(Synthetic, ConfigValidationAndJson) {
  SyntheticConfig c;
  c.dispersion = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  nlohmann::json j = SyntheticConfig{};
  j["unknown_key"] = 1;
  EXPECT_THROW(j.get<SyntheticConfig>(), ConfigError);
  nlohmann::json k{{"days", 12}, {"truth", "ln"}};
  const auto parsed = k.get<SyntheticConfig>();
  EXPECT_EQ(parsed.days, 12);
  EXPECT_EQ(parsed.truth, Family::LogNormal);
  const auto back = nlohmann::json(parsed).get<SyntheticConfig>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(parsed));
}

namespace {

RankHistogram raw_ranks(const Dataset& d) {
  std::vector<int> ranks;
  for (std::size_t i = 0; i < d.size(); ++i) {
    ranks.push_back(verification_rank(d.forecasts[i].members, d.observations[i], 1000 + i));
  }
  return rank_histogram(ranks, d.groups.members());
}

SyntheticConfig rank_config(double dispersion, double bias) {
  SyntheticConfig c;
  c.stations = 10;
  c.days = 1000;
  c.dispersion = dispersion;
  c.bias = bias;
  c.control_member = false;
  c.group_sizes = {10};
  return c;
}

}  // namespace

TEST(Synthetic, CalibratedConstructionGivesFlatRanks) {
  const RankHistogram h = raw_ranks(generate_synthetic(rank_config(1.0, 0.0)));
  EXPECT_EQ(h.total, 10000u);
  EXPECT_GT(chi_square_uniform_test(h.counts).p_value, 0.01);
}

TEST(Synthetic, UnderdispersionGivesUShapedRanks) {
  const RankHistogram h = raw_ranks(generate_synthetic(rank_config(0.4, 0.0)));
  const double uniform_share = 1.0 / static_cast<double>(h.counts.size());
  const double ends = static_cast<double>(h.counts.front() + h.counts.back()) / h.total;
  EXPECT_GT(ends, 2.0 * 2.0 * uniform_share);
}

TEST(Synthetic, BiasIncreasesRawMae) {
  auto raw_mae = [](const Dataset& d) {
    std::vector<double> med;
    for (const auto& f : d.forecasts) med.push_back(median(EmpiricalEnsemble(f.members)));
    return mae(med, d.observations);
  };
  EXPECT_GT(raw_mae(generate_synthetic(rank_config(1.0, 1.0))),
            raw_mae(generate_synthetic(rank_config(1.0, 0.0))));
}
