#include <cmath>

#include <gtest/gtest.h>

#include "jdpinn/calibration.hpp"
#include "jdpinn/montecarlo.hpp"
#include "jdpinn/rng.hpp"

using namespace jdpinn;

namespace {
const MertonParams kSpy{0.179, 0.143, 2.0, -0.012, 0.042};
constexpr double kDay = 1.0 / 252.0;

ReturnSeries simulated_returns(const MertonParams& p, int n, std::uint64_t seed) {
  PathConfig cfg;
  cfg.horizon = n * kDay;
  cfg.steps = n;
  cfg.seed = seed;
  const auto path = simulate_paths(p, cfg);
  std::vector<double> prices(path.data(), path.data() + path.cols());
  return log_returns(prices, kDay);
}

// Composite Simpson rule on [a, b] with n (even) panels.
template <typename F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}
}  // namespace

TEST(Density, ZeroJumpLimitIsNormal) {
  const MertonParams p{0.1, 0.2, 0.0, 0.3, 0.1};
  const double t = 0.5;
  EXPECT_NEAR(merton_density(p, p.mu * t, t, 10), 1.0 / std::sqrt(2 * M_PI * 0.04 * t), 1e-12);
}

TEST(Density, IntegratesToOneOnDailyScale) {
  MertonParams p = kSpy;
  p.mu = 0.0;
  const double mass = simpson([&](double x) { return merton_density(p, x, kDay, 10); }, -0.5, 0.5, 20000);
  EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(Density, EvenForSymmetricParams) {
  const MertonParams p{0.0, 0.2, 3.0, 0.0, 0.05};
  EXPECT_NEAR(merton_density(p, 0.01, kDay, 10), merton_density(p, -0.01, kDay, 10), 1e-12);
}

TEST(Density, NormalizedForRandomInBoundsParams) {
  const ParamBounds b;
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    MertonParams p{rng.uniform(b.mu.low, b.mu.high), rng.uniform(b.sigma.low, b.sigma.high),
                   rng.uniform(b.lambda.low, b.lambda.high), rng.uniform(b.mu_y.low, b.mu_y.high),
                   rng.uniform(b.sigma_y.low, b.sigma_y.high)};
    const double t = i % 2 ? kDay : 0.25;
    const int k = 10;
    const double sd = std::sqrt(p.sigma * p.sigma * t + k * p.sigma_y * p.sigma_y);
    const double centre = p.mu * t;
    // widen for the jump means, which the stated window does not account for
    const double lo = std::min(centre - 10 * sd, centre + k * std::min(p.mu_y, 0.0) - 10 * sd);
    const double hi = std::max(centre + 10 * sd, centre + k * std::max(p.mu_y, 0.0) + 10 * sd);
    const double mass = simpson([&](double x) { return merton_density(p, x, t, k); }, lo, hi, 200000);
    // mass missing beyond the k-th jump term
    double tail = 1.0;
    for (int n = 0; n <= k; ++n) tail -= std::exp(-p.lambda * t) * std::pow(p.lambda * t, n) / std::tgamma(n + 1.0);
    EXPECT_NEAR(mass, 1.0 - tail, 1e-4) << i;
    EXPECT_GE(merton_density(p, hi + 1, t, k), 0.0);
  }
}

TEST(Density, TruncationErrorBound) {
  const MertonParams p{0.0, 0.15, 5.0, -0.1, 0.2};
  const double t = 1.0;
  for (double x : {-1.0, -0.3, 0.0, 0.4}) {
    for (int k = 1; k < 15; ++k) {
      const double diff = merton_density(p, x, t, k + 1) - merton_density(p, x, t, k);
      EXPECT_GE(diff, 0.0);
      const double weight = std::exp(-p.lambda * t) * std::pow(p.lambda * t, k + 1) / std::tgamma(k + 2.0);
      const double max_summand = 1.0 / std::sqrt(2 * M_PI * (p.sigma * p.sigma * t + (k + 1) * p.sigma_y * p.sigma_y));
      EXPECT_LE(diff, weight * max_summand * (1 + 1e-12));
    }
  }
}

TEST(Likelihood, SingleObservationAtMode) {
  const MertonParams p{0.05, 0.3, 0.0, 0.0, 0.1};
  ReturnSeries s;
  s.dt = kDay;
  s.x.assign(30, p.mu * kDay);
  const double one = -std::log(1.0 / std::sqrt(2 * M_PI * p.sigma * p.sigma * kDay));
  EXPECT_NEAR(neg_log_likelihood(p, s, 10), 30 * one, 1e-9);
}

TEST(Likelihood, Additive) {
  auto s = simulated_returns(kSpy, 200, 1);
  const double once = neg_log_likelihood(kSpy, s, 10);
  auto d = s;
  d.x.insert(d.x.end(), s.x.begin(), s.x.end());
  EXPECT_NEAR(neg_log_likelihood(kSpy, d, 10), 2 * once, 1e-9 * std::abs(once));
}

TEST(Likelihood, TrueParamsBeatPerturbed) {
  const auto s = simulated_returns(kSpy, 5000, 2);
  MertonParams worse = kSpy;
  worse.sigma += 0.05;
  EXPECT_LT(neg_log_likelihood(kSpy, s, 10), neg_log_likelihood(worse, s, 10));
}

TEST(Likelihood, FiniteEverywhereInBounds) {
  const auto s = simulated_returns(kSpy, 100, 3);
  const ParamBounds b;
  for (const auto& p : {MertonParams{b.mu.low, b.sigma.low, b.lambda.high, b.mu_y.high, b.sigma_y.low},
                        MertonParams{b.mu.high, b.sigma.high, b.lambda.low, b.mu_y.low, b.sigma_y.high}}) {
    EXPECT_TRUE(std::isfinite(neg_log_likelihood(p, s, 10)));
  }
}

TEST(Returns, ValidationAndErrors) {
  EXPECT_THROW(log_returns(std::vector<double>{1, 2, -1}, kDay), ValidationError);
  ReturnSeries s;
  s.x.assign(10, 0.0);
  EXPECT_THROW(s.validate(), ValidationError);
  s.x.assign(40, 0.001);
  EXPECT_THROW(calibrate(s, ParamBounds{}, {}), CalibrationError);
}

TEST(Calibrate, DegenerateBoxReturnsCentre) {
  const auto s = simulated_returns(kSpy, 300, 4);
  AnnealConfig cfg;
  cfg.max_iters = 50;
  const auto r = calibrate(s, ParamBounds::around(kSpy, 1e-6), cfg);
  const auto a = r.params.to_array(), e = kSpy.to_array();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], e[i], 1e-6);
}

TEST(Calibrate, RecoversSimulatedParametersDeterministically) {
  const auto s = simulated_returns(kSpy, 10000, 42);
  AnnealConfig cfg;
  cfg.max_iters = 300;
  const ParamBounds b;
  const auto r = calibrate(s, b, cfg);
  EXPECT_TRUE(b.contains(r.params));
  EXPECT_NEAR(r.params.sigma, 0.143, 0.02);
  EXPECT_NEAR(r.params.lambda, 2.0, 1.0);
  const auto again = calibrate(s, b, cfg);
  EXPECT_EQ(again.params, r.params);
  EXPECT_EQ(again.objective, r.objective);
  EXPECT_LE(r.objective, neg_log_likelihood(kSpy, s, cfg.truncation_k) + 1e-9);
}
