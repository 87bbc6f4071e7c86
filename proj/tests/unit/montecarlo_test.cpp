#include <cmath>

#include <gtest/gtest.h>

#include "jdpinn/analytical.hpp"
#include "jdpinn/montecarlo.hpp"
#include "jdpinn/rng.hpp"

using namespace jdpinn;

namespace {
const MertonParams kSpy{0.179, 0.143, 2.0, -0.012, 0.042};
}

TEST(Paths, DeterministicLimit) {
  const MertonParams p{0.07, 1e-12, 0.0, 0.0, 0.1};
  PathConfig cfg;
  cfg.horizon = 2.0;
  cfg.steps = 100;
  const auto paths = simulate_paths(p, cfg);
  const double mu_eff = effective_drift(p, cfg);
  for (int j = 0; j <= cfg.steps; ++j) {
    const double t = cfg.horizon * j / cfg.steps;
    EXPECT_NEAR(paths(0, j) / (cfg.s0 * std::exp(mu_eff * t)), 1.0, 1e-6);
  }
}

TEST(Paths, ShapeDeterminismPositivity) {
  PathConfig cfg;
  cfg.n_paths = 8;
  cfg.steps = 500;
  cfg.horizon = 2.0;
  const auto a = simulate_paths(kSpy, cfg);
  const auto b = simulate_paths(kSpy, cfg);
  EXPECT_EQ(a.rows(), 8);
  EXPECT_EQ(a.cols(), 501);
  EXPECT_TRUE(a == b);
  EXPECT_GT(a.minCoeff(), 0.0);
  cfg.seed = 43;
  EXPECT_FALSE(a == simulate_paths(kSpy, cfg));
}

TEST(Paths, RiskNeutralMartingale) {
  PathConfig cfg;
  cfg.measure = Measure::RiskNeutral;
  cfg.rate = 0.05;
  cfg.horizon = 1.0;
  cfg.steps = 1;
  cfg.n_paths = 1'000'000;
  const auto st = simulate_terminal(kSpy, cfg);
  double m = 0, m2 = 0;
  for (double v : st) {
    const double d = std::exp(-cfg.rate) * v / cfg.s0;
    m += d;
    m2 += d * d;
  }
  const double n = static_cast<double>(st.size());
  m /= n;
  EXPECT_NEAR(m, 1.0, 3 * std::sqrt((m2 / n - m * m) / n));
}

TEST(Paths, MartingaleAcrossRandomParams) {
  const ParamBounds b;
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    const MertonParams p{rng.uniform(b.mu.low, b.mu.high), rng.uniform(0.05, 0.5), rng.uniform(0, 5),
                         rng.uniform(-0.3, 0.3), rng.uniform(0.01, 0.3)};
    PathConfig cfg;
    cfg.measure = Measure::RiskNeutral;
    cfg.rate = 0.03;
    cfg.horizon = 0.5;
    cfg.steps = 1;
    cfg.n_paths = 100000;
    cfg.seed = 1000 + i;
    const auto st = simulate_terminal(p, cfg);
    double m = 0, m2 = 0;
    for (double v : st) {
      const double d = std::exp(-cfg.rate * cfg.horizon) * v;
      m += d;
      m2 += d * d;
    }
    const double n = static_cast<double>(st.size());
    m /= n;
    EXPECT_NEAR(m, cfg.s0, 4 * std::sqrt((m2 / n - m * m) / n)) << i;
  }
}

TEST(Paths, LogReturnMomentsMatchTheory) {
  PathConfig cfg;
  cfg.steps = 200000;
  cfg.horizon = cfg.steps / 252.0;
  const auto path = simulate_paths(kSpy, cfg);
  const double dt = 1.0 / 252.0;
  const double k = jump_compensator(kSpy);
  const double mean = (kSpy.mu - kSpy.lambda * k - 0.5 * kSpy.sigma * kSpy.sigma + kSpy.lambda * kSpy.mu_y) * dt;
  const double var =
      (kSpy.sigma * kSpy.sigma + kSpy.lambda * (kSpy.mu_y * kSpy.mu_y + kSpy.sigma_y * kSpy.sigma_y)) * dt;
  double s = 0, s2 = 0;
  const int n = cfg.steps;
  for (int j = 0; j < n; ++j) {
    const double x = std::log(path(0, j + 1) / path(0, j));
    s += x;
    s2 += x * x;
  }
  const double m = s / n, v = s2 / n - m * m;
  EXPECT_NEAR(m, mean, 4 * std::sqrt(var / n));
  // variance of the sample variance needs the fourth moment; a loose bound suffices
  EXPECT_NEAR(v, var, 0.03 * var);
}

TEST(McPrice, BlackScholesOracle) {
  const MertonParams p{0, 0.2, 0, 0, 0.1};
  const OptionSpec spec{100, 100, 1, 0.05};
  const auto est = mc_price_european(p, spec, 1'000'000, 42);
  EXPECT_NEAR(est.price, 10.450584, 3 * est.std_error);
  EXPECT_GT(est.std_error, 0.0);
}

TEST(McPrice, DeepOtmAndWorthlessPut) {
  const MertonParams p{0, 0.1, 0, 0, 0.1};
  const auto otm = mc_price_european(p, OptionSpec{100, 1000, 0.25, 0.05}, 100000, 1);
  EXPECT_LT(otm.price, 3 * otm.std_error + 1e-300);
  const auto put = mc_price_european(kSpy, OptionSpec{100, 1e-12, 1, 0.05, OptionKind::Put}, 10000, 1);
  EXPECT_EQ(put.price, 0.0);
}

TEST(Histogram, ConstantPathsOccupyOneBin) {
  PathMatrix paths = PathMatrix::Constant(3, 10, 50.0);
  const auto h = log_return_histogram(paths, 10);
  int occupied = 0;
  for (double d : h.density) occupied += d > 0;
  EXPECT_EQ(occupied, 1);
}

TEST(Histogram, NormalizedAndLeptokurtic) {
  PathConfig cfg;
  cfg.n_paths = 8;
  cfg.steps = 14 * 252;
  cfg.horizon = 14;
  const auto paths = simulate_paths(kSpy, cfg);
  const auto h = log_return_histogram(paths, 100);
  ASSERT_EQ(h.edges.size(), 101u);
  double mass = 0;
  for (std::size_t b = 0; b < h.density.size(); ++b) mass += h.density[b] * (h.edges[b + 1] - h.edges[b]);
  EXPECT_NEAR(mass, 1.0, 1e-9);
  EXPECT_GT(excess_kurtosis(paths), 0.0);
  EXPECT_THROW(log_return_histogram(paths, 1), ValidationError);
}
