#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "jdpinn/parallel.hpp"
#include "jdpinn/rng.hpp"

using namespace jdpinn;

TEST(Rng, DeterministicPerSeed) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    (void)c;
  }
  Rng d(42);
  EXPECT_NE(d(), c());
}

TEST(Rng, UniformRangeAndMean) {
  Rng r(1);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // stderr of the mean is sqrt(1/12/n)
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
}

TEST(Rng, NormalMoments) {
  Rng r(2);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(Rng, PoissonMeanAndVariance) {
  Rng r(3);
  for (double mean : {0.008, 0.5, 3.0, 27.5}) {
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(r.poisson(mean));
      s += k;
      s2 += k * k;
    }
    const double m = s / n;
    EXPECT_NEAR(m, mean, 4 * std::sqrt(mean / n)) << mean;
    EXPECT_NEAR(s2 / n - m * m, mean, 0.05 * mean + 1e-3) << mean;
  }
  EXPECT_EQ(r.poisson(0.0), 0u);
}

TEST(Rng, BelowAndShuffle) {
  Rng r(4);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  r.shuffle(w);
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> s;
  for (std::uint64_t i = 0; i < 1000; ++i) s.insert(derive_seed(42, i));
  EXPECT_EQ(s.size(), 1000u);
  EXPECT_EQ(derive_seed(42, 5), derive_seed(42, 5));
}

TEST(ParallelFor, CoversEveryIndexAndPropagatesErrors) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 3) throw std::runtime_error("x"); }, 3),
               std::runtime_error);
}
