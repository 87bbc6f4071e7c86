#include <cmath>

#include <gtest/gtest.h>

#include "jdpinn/anneal.hpp"
#include "jdpinn/core.hpp"

using namespace jdpinn;

namespace {
double rastrigin(std::span<const double> x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2 * M_PI * v);
  return s;
}
}  // namespace

TEST(NelderMead, QuadraticInBox) {
  Box box{{-5, -5}, {5, 5}};
  const auto f = [](std::span<const double> x) { return (x[0] - 1) * (x[0] - 1) + 3 * (x[1] + 2) * (x[1] + 2); };
  const std::vector<double> x0{4, 4};
  const auto r = nelder_mead_bounded(f, box, x0, {.max_iters = 2000});
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], -2.0, 1e-4);
}

TEST(NelderMead, MinimumOnBoundaryStaysInside) {
  Box box{{0, 0}, {1, 1}};
  const auto f = [](std::span<const double> x) { return (x[0] + 1) * (x[0] + 1) + (x[1] - 0.5) * (x[1] - 0.5); };
  const std::vector<double> x0{0.5, 0.5};
  const auto r = nelder_mead_bounded(f, box, x0, {.max_iters = 2000});
  EXPECT_TRUE(box.contains(r.x));
  EXPECT_NEAR(r.x[0], 0.0, 1e-6);
}

TEST(DualAnnealing, FindsRastriginGlobalMinimum) {
  Box box{{-5.12, -5.12, -5.12}, {5.12, 5.12, 5.12}};
  AnnealOptions o;
  o.max_iters = 1000;
  o.seed = 1234;
  const auto r = dual_annealing(rastrigin, box, o);
  EXPECT_LT(r.value, 1e-6);
  for (double v : r.x) EXPECT_NEAR(v, 0.0, 1e-3);
}

TEST(DualAnnealing, DeterministicAndInBounds) {
  Box box{{-2, -2}, {3, 3}};
  AnnealOptions o;
  o.max_iters = 200;
  o.record_accepted = true;
  const auto f = [](std::span<const double> x) { return std::pow(x[0] - 2.9, 2) + std::pow(x[1] + 1.5, 2); };
  const auto a = dual_annealing(f, box, o);
  const auto b = dual_annealing(f, box, o);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.value, b.value);
  EXPECT_TRUE(box.contains(a.x));
  for (double e : a.accepted) EXPECT_GE(e, a.value);
}

TEST(DualAnnealing, BadBoxThrows) {
  Box box{{1}, {0}};
  AnnealOptions o;
  EXPECT_THROW(dual_annealing([](std::span<const double>) { return 0.0; }, box, o), ValidationError);
}
