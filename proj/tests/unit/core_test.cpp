#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "jdpinn/core.hpp"
#include "jdpinn/datagen.hpp"
#include "jdpinn/rng.hpp"

using namespace jdpinn;

TEST(Payoff, Examples) {
  EXPECT_EQ(payoff(OptionKind::Call, 100, 100), 0.0);
  EXPECT_EQ(payoff(OptionKind::Call, 100, 120), 20.0);
  EXPECT_EQ(payoff(OptionKind::Put, 100, 80), 20.0);
}

TEST(Payoff, NonnegativeAndLipschitz) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto kind = i % 2 ? OptionKind::Call : OptionKind::Put;
    const double k = rng.uniform(1, 200), s1 = rng.uniform(0.01, 300), s2 = rng.uniform(0.01, 300);
    EXPECT_GE(payoff(kind, k, s1), 0.0);
    EXPECT_LE(std::abs(payoff(kind, k, s1) - payoff(kind, k, s2)), std::abs(s1 - s2) + 1e-12);
  }
}

TEST(Metrics, PerfectFit) {
  const std::vector<double> a{1, 2, 3, 5};
  const auto m = compute_metrics(a, a);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_EQ(m.r2, 1.0);
}

TEST(Metrics, ConstantShift) {
  const std::vector<double> a{1, 2, 3, 5};
  std::vector<double> p;
  for (double v : a) p.push_back(v + 1);
  const auto m = compute_metrics(p, a);
  EXPECT_DOUBLE_EQ(m.mae, 1.0);
  EXPECT_DOUBLE_EQ(m.rmse, 1.0);
  EXPECT_DOUBLE_EQ(m.max_error, 1.0);
}

TEST(Metrics, HandComputed) {
  const auto m = compute_metrics(std::vector<double>{0, 0}, std::vector<double>{1, 3});
  EXPECT_DOUBLE_EQ(m.mae, 2.0);
  EXPECT_DOUBLE_EQ(m.mse, 5.0);
  EXPECT_DOUBLE_EQ(m.r2, -4.0);
  EXPECT_DOUBLE_EQ(m.max_error, 3.0);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(compute_metrics(std::vector<double>{1}, std::vector<double>{1, 2}), ValidationError);
  EXPECT_THROW(compute_metrics(std::vector<double>{}, std::vector<double>{}), ValidationError);
  EXPECT_THROW(compute_metrics(std::vector<double>{1, 2}, std::vector<double>{3, 3}), ValidationError);
}

TEST(Metrics, Invariants) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(40), p(40);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal(10, 3);
      p[i] = a[i] + rng.normal(0, 1);
    }
    auto m = compute_metrics(p, a);
    EXPECT_NEAR(m.rmse * m.rmse, m.mse, 1e-12 * m.mse);
    EXPECT_LE(m.mae, m.max_error);
    EXPECT_LE(m.r2, 1.0);
    EXPECT_LE(m.explained_variance, 1.0);
    EXPECT_LE(m.r2, m.explained_variance + 1e-12);
    // unbiased residuals make r2 and explained variance agree
    double bias = 0;
    for (std::size_t i = 0; i < a.size(); ++i) bias += p[i] - a[i];
    bias /= static_cast<double>(a.size());
    for (auto& v : p) v -= bias;
    m = compute_metrics(p, a);
    EXPECT_NEAR(m.r2, m.explained_variance, 1e-12);
  }
}

TEST(Params, Validate) {
  MertonParams p;
  EXPECT_NO_THROW(p.validate());
  p.sigma = 0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.lambda = -0.1;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.mu = std::nan("");
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Params, JsonRoundTrip) {
  const MertonParams p{0.179, 0.143, 2.0, -0.012, 0.042};
  EXPECT_EQ(params_from_json(params_to_json(p)), p);
  EXPECT_THROW(params_from_json("{\"mu\":1}"), ValidationError);
  EXPECT_THROW(params_from_json("not json"), ValidationError);
}

TEST(Bounds, DefaultsAndClamp) {
  ParamBounds b;
  EXPECT_NO_THROW(b.validate());
  const MertonParams calibrated{0.179, 0.143, 2.0, -0.012, 0.042};
  EXPECT_TRUE(b.contains(calibrated));
  const MertonParams wild{5, -1, 9, -3, 0};
  const auto c = b.clamp(wild);
  EXPECT_TRUE(b.contains(c));
  EXPECT_EQ(c.sigma, b.sigma.low);
  EXPECT_EQ(b.clamp(c), c);
}

TEST(Spec, Validate) {
  OptionSpec s;
  EXPECT_NO_THROW(s.validate());
  s.tau = 0;
  EXPECT_NO_THROW(s.validate());
  s.tau = -1;
  EXPECT_THROW(s.validate(), ValidationError);
  s = {};
  s.spot = 0;
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Parse, KindsStylesSplits) {
  EXPECT_EQ(parse_kind("C"), OptionKind::Call);
  EXPECT_EQ(parse_kind("put"), OptionKind::Put);
  EXPECT_THROW(parse_kind("X"), ValidationError);
  EXPECT_EQ(parse_style("american"), ExerciseStyle::American);
  EXPECT_EQ(parse_split("val"), Split::Val);
  EXPECT_EQ(to_string(OptionKind::Put), "P");
}

TEST(Splits, ProportionsAndDeterminism) {
  QuoteDataset d;
  for (int i = 0; i < 1000; ++i) d.rows.push_back({OptionSpec{100, 100.0 + i, 1, 0.01}, 1.0});
  assign_splits(d, 0.7, 0.15, 42);
  EXPECT_EQ(d.count(Split::Train), 700u);
  EXPECT_EQ(d.count(Split::Val), 150u);
  EXPECT_EQ(d.count(Split::Test), 150u);
  auto e = d;
  assign_splits(e, 0.7, 0.15, 42);
  EXPECT_EQ(d, e);
  assign_splits(e, 0.7, 0.15, 43);
  EXPECT_NE(d, e);
}

TEST(Dataset, CsvRoundTripIsExact) {
  QuoteDataset d;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    OptionSpec s{rng.uniform(200, 500), rng.uniform(100, 700), rng.uniform(0.02, 2), rng.uniform(0, 0.05),
                 i % 3 ? OptionKind::Call : OptionKind::Put, ExerciseStyle::American};
    d.rows.push_back({s, rng.uniform(0, 100), static_cast<Split>(i % 3)});
  }
  const auto path = std::filesystem::temp_directory_path() / "jdpinn_core_roundtrip.csv";
  write_dataset_csv(path, d);
  const auto loaded = load_market_csv(path);
  EXPECT_TRUE(loaded.rejected.empty());
  EXPECT_TRUE(loaded.had_split_column);
  EXPECT_EQ(loaded.data, d);
  std::filesystem::remove(path);
}

TEST(Dataset, ValidateRejectsNegativePrice) {
  QuoteDataset d;
  d.rows.push_back({OptionSpec{}, -1.0});
  EXPECT_THROW(d.validate(), ValidationError);
}
