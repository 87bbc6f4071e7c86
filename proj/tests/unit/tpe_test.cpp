#include <cmath>

#include <gtest/gtest.h>

#include "jdpinn/tpe.hpp"
#include "jdpinn/training.hpp"

using namespace jdpinn;

namespace {
double quadratic(double a, double b) { return (a - 0.3) * (a - 0.3) + (b - 0.7) * (b - 0.7); }
}

TEST(Tpe, QuadraticStub) {
  TuneConfig cfg;  // 50 trials, seed 42
  const auto r = tune_coefficients(quadratic, cfg);
  EXPECT_NEAR(r.alpha, 0.3, 0.1);
  EXPECT_NEAR(r.beta, 0.7, 0.1);
  ASSERT_EQ(r.log.size(), 50u);
  for (std::size_t i = 1; i < r.log.size(); ++i) EXPECT_LE(r.log[i].best_so_far, r.log[i - 1].best_so_far);
}

TEST(Tpe, BeatsRandomSearchOnAverage) {
  double tpe = 0, rnd = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    TuneConfig cfg;
    cfg.seed = seed;
    cfg.n_trials = 40;
    tpe += tune_coefficients(quadratic, cfg).best_val_loss;
    cfg.n_startup = cfg.n_trials;
    rnd += tune_coefficients(quadratic, cfg).best_val_loss;
  }
  EXPECT_LT(tpe, rnd);
}

TEST(Tpe, PureRandomReturnsObservedArgmin) {
  TuneConfig cfg;
  cfg.n_trials = 12;
  cfg.n_startup = 12;
  const auto r = tune_coefficients(quadratic, cfg);
  double best = INFINITY;
  for (const auto& t : r.log) best = std::min(best, t.val_loss);
  EXPECT_EQ(r.best_val_loss, best);
  EXPECT_EQ(quadratic(r.alpha, r.beta), best);
}

TEST(Tpe, DeterministicAndInBounds) {
  TpeConfig cfg;
  cfg.bounds = {{0.01, 1}, {0.5, 20}, {1e-3, 1e-1}};
  cfg.n_trials = 30;
  const auto f = [](std::span<const double> x) { return std::log(x[0]) * std::log(x[0]) + x[1] + x[2]; };
  const auto a = tpe_minimize(f, cfg);
  const auto b = tpe_minimize(f, cfg);
  ASSERT_EQ(a.size(), 30u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    for (std::size_t d = 0; d < 3; ++d) EXPECT_TRUE(cfg.bounds[d].contains(a[i].x[d]));
  }
}

TEST(Tpe, FailedTrialsAndAllFailing) {
  TpeConfig cfg;
  cfg.bounds = {{0.1, 1}};
  cfg.n_trials = 10;
  cfg.n_startup = 4;
  int calls = 0;
  const auto r = tpe_minimize(
      [&](std::span<const double> x) {
        if (++calls % 2) throw std::runtime_error("diverged");
        return x[0];
      },
      cfg);
  EXPECT_EQ(r.size(), 10u);
  EXPECT_TRUE(std::isinf(r[0].value));
  EXPECT_TRUE(std::isfinite(r[best_trial(r)].value));
  EXPECT_THROW(tpe_minimize([](std::span<const double>) { return NAN; }, cfg), std::runtime_error);
}

TEST(Tpe, ConfigValidation) {
  TuneConfig cfg;
  cfg.n_startup = 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.n_trials = 5;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.alpha = {0.0, 1.0};
  EXPECT_THROW(cfg.validate(), ValidationError);
}
