#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "jdpinn/datagen.hpp"

using namespace jdpinn;
namespace fs = std::filesystem;

namespace {
const MertonParams kSpy{0.179, 0.143, 2.0, -0.012, 0.042};

fs::path write_temp(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

SamplerRanges small(int n, OptionKind kind = OptionKind::Call) {
  SamplerRanges r;
  r.n_samples = n;
  r.kind = kind;
  return r;
}
}  // namespace

TEST(Ranges, Validation) {
  SamplerRanges r;
  EXPECT_NO_THROW(r.validate());
  r.tau = {0.0, 1.0};
  EXPECT_THROW(r.validate(), ValidationError);
  r = {};
  r.spot = {5, 4};
  EXPECT_THROW(r.validate(), ValidationError);
}

TEST(Synthetic, DeterministicAndSane) {
  for (auto kind : {OptionKind::Call, OptionKind::Put}) {
    const auto a = generate_synthetic(kSpy, small(10, kind));
    const auto b = generate_synthetic(kSpy, small(10, kind));
    ASSERT_EQ(a.size(), 10u);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.count(Split::Train), 7u);
    for (const auto& row : a.rows) {
      const auto& s = row.spec;
      EXPECT_EQ(s.style, ExerciseStyle::American);
      EXPECT_GE(row.price, payoff(s, s.spot));
      EXPECT_LE(row.price, kind == OptionKind::Call ? s.spot : s.strike);
    }
  }
}

TEST(Synthetic, LabelsMatchFreshSolve) {
  const auto d = generate_synthetic(kSpy, small(5));
  for (const auto& row : d.rows) EXPECT_NEAR(label_price(kSpy, row.spec), row.price, 1e-6);
}

TEST(Synthetic, ThreadingDoesNotChangeResult) {
  SynthOptions one, many;
  one.threads = 1;
  many.threads = 4;
  EXPECT_EQ(generate_synthetic(kSpy, small(12), one), generate_synthetic(kSpy, small(12), many));
}

TEST(Labels, CallPricesNonincreasingInStrike) {
  double prev = 1e300;
  for (double k = 200; k <= 400; k += 20) {
    const double v = label_price(kSpy, OptionSpec{300, k, 0.5, 0.03, OptionKind::Call, ExerciseStyle::American});
    EXPECT_LE(v, prev + 1e-9);
    prev = v;
  }
}

TEST(LoadCsv, RawSchemaMidpointAndRejections) {
  const auto p = write_temp("jdpinn_raw.csv",
                            "underlying,strike,tau,rate,kind,bid,ask\n"
                            "100,100,0.5,0.01,C,2,4\n"
                            "100,90,0.5,0.01,P,-1,3\n"
                            "100,90,0.5,0.01,P,5,3\n"
                            "100,90,zz,0.01,P,1,3\n"
                            "100,90,0.5,0.01\n");
  const auto r = load_market_csv(p);
  ASSERT_EQ(r.data.size(), 1u);
  EXPECT_DOUBLE_EQ(r.data.rows[0].price, 3.0);
  ASSERT_EQ(r.rejected.size(), 4u);
  EXPECT_EQ(r.rejected[0].line, 3u);
  EXPECT_EQ(r.rejected[3].line, 6u);
  fs::remove(p);
}

TEST(LoadCsv, EmptyFileWarns) {
  const auto p = write_temp("jdpinn_empty.csv", "");
  const auto r = load_market_csv(p);
  EXPECT_TRUE(r.data.empty());
  EXPECT_FALSE(r.warnings.empty());
  fs::remove(p);
}

TEST(LoadCsv, MissingColumnsAndUnreadable) {
  const auto p = write_temp("jdpinn_bad.csv", "underlying,strike,tau\n1,2,3\n");
  EXPECT_THROW(load_market_csv(p), ValidationError);
  fs::remove(p);
  EXPECT_THROW(load_market_csv("/nonexistent/dir/file.csv"), std::runtime_error);
}

TEST(LoadCsv, AssignsSplitsWhenAbsent) {
  std::string body = "underlying,strike,tau,rate,kind,price\n";
  for (int i = 0; i < 100; ++i) body += "100," + std::to_string(50 + i) + ",1,0.01,C,1\n";
  const auto p = write_temp("jdpinn_nosplit.csv", body);
  const auto r = load_market_csv(p);
  EXPECT_FALSE(r.had_split_column);
  EXPECT_EQ(r.data.count(Split::Train), 70u);
  EXPECT_EQ(r.data.count(Split::Val), 15u);
  fs::remove(p);
}

TEST(Subsample, IdentityDeterminismAndSize) {
  QuoteDataset d;
  for (int i = 0; i < 1000; ++i) d.rows.push_back({OptionSpec{100, 50.0 + i, 1, 0.01}, 1.0, static_cast<Split>(i % 3)});
  EXPECT_EQ(subsample(d, 1.0, 42), d);
  const auto a = subsample(d, 0.1, 42);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(a, subsample(d, 0.1, 42));
  EXPECT_NE(a, subsample(d, 0.1, 7));
  EXPECT_THROW(subsample(d, 0.0, 42), ValidationError);
  EXPECT_THROW(subsample(d, 1.5, 42), ValidationError);
}

TEST(Subsample, PermilleOfLargeChain) {
  const auto idx = subsample_indices(3'589'079, 0.001, 42);
  EXPECT_EQ(idx.size(), 3589u);
  EXPECT_EQ(idx.size(), 2512u + 538u + 539u);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
}

TEST(Subsample, PreservesSplitProportionsApproximately) {
  QuoteDataset d;
  for (int i = 0; i < 20000; ++i) d.rows.push_back({OptionSpec{100, 100, 1, 0.01}, 1.0});
  assign_splits(d, 0.7, 0.15, 42);
  const auto s = subsample(d, 0.1, 3);
  EXPECT_NEAR(static_cast<double>(s.count(Split::Train)) / s.size(), 0.7, 0.03);
  EXPECT_NEAR(static_cast<double>(s.count(Split::Test)) / s.size(), 0.15, 0.03);
}
