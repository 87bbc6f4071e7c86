#include <cmath>

#include <gtest/gtest.h>

#include "jdpinn/analytical.hpp"
#include "jdpinn/pide.hpp"
#include "jdpinn/rng.hpp"

using namespace jdpinn;

namespace {
const MertonParams kSpy{0.179, 0.143, 2.0, -0.012, 0.042};

template <typename F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

double pide_price(const MertonParams& p, const OptionSpec& s, int nx, int nt) {
  GridOptions g;
  g.n_x = nx;
  g.n_t = nt;
  const auto grid = make_grid(p, s.strike, s.tau, s.spot, s.spot, g);
  return interpolate(solve(p, s.kind, s.style, s.strike, s.rate, grid), s.spot, 0.0);
}
}  // namespace

TEST(GridSpec, Validation) {
  GridSpec g;
  EXPECT_NO_THROW(g.validate());
  g.n_x = 7;
  EXPECT_THROW(g.validate(), ValidationError);
  g = {};
  g.n_t = 3;
  EXPECT_THROW(g.validate(), ValidationError);
  g = {};
  g.x_max = g.x_min;
  EXPECT_THROW(g.validate(), ValidationError);
  g = {};
  g.ext = 0;
  EXPECT_THROW(g.validate(), ValidationError);
}

TEST(Levy, MassModeSymmetry) {
  const double mass = simpson([](double y) { return levy_density(kSpy, y); }, -1, 1, 20000);
  EXPECT_NEAR(mass, kSpy.lambda, 1e-9);
  EXPECT_NEAR(levy_density(kSpy, kSpy.mu_y), 2.0 / (kSpy.sigma_y * std::sqrt(2 * M_PI)), 1e-12);
  EXPECT_NEAR(levy_density(kSpy, kSpy.mu_y + 0.03), levy_density(kSpy, kSpy.mu_y - 0.03), 1e-12);
}

TEST(Imex, CoefficientExamples) {
  const MertonParams p{0, 0.2, 0.5, 0.1, 0.2};
  const auto c = imex_coefficients(p, 0.05, 0.1, 0.01);
  EXPECT_NEAR(c.b, 1.0455, 1e-14);
  EXPECT_NEAR(c.a + c.c, 0.01 * 0.04 / 0.01, 1e-14);
  const MertonParams nj{0, 0.2, 0.0, 0.7, 0.2};
  EXPECT_NEAR(imex_coefficients(nj, 0.05, 0.1, 0.01).gamma, 0.05 - 0.02, 1e-15);
}

TEST(Convolution, FftMatchesDirectSum) {
  Rng rng(1);
  for (int half : {0, 3, 40}) {
    const auto kernel = jump_kernel(kSpy, 0.004, half);
    ASSERT_EQ(kernel.size(), static_cast<std::size_t>(2 * half + 1));
    std::vector<double> signal(300 + 2 * half);
    for (auto& v : signal) v = rng.uniform(-5, 5);
    std::vector<double> fft(300), direct(300);
    JumpConvolver conv(kernel, signal.size());
    conv.apply(signal, fft);
    jump_integral_direct(kernel, signal, direct);
    for (std::size_t i = 0; i < fft.size(); ++i) EXPECT_NEAR(fft[i], direct[i], 1e-12) << half << ' ' << i;
    conv.apply(signal, fft);  // plans are reusable
    EXPECT_NEAR(fft[7], direct[7], 1e-12);
  }
}

TEST(Tridiagonal, MatchesDenseSolve) {
  Rng rng(2);
  for (bool dominant : {true, false}) {
    const int n = 40;
    std::vector<double> sub(n), diag(n), sup(n), rhs(n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      sub[i] = i > 0 ? rng.uniform(-1, 1) : 0.0;
      sup[i] = i < n - 1 ? rng.uniform(-1, 1) : 0.0;
      diag[i] = dominant ? 3.0 + rng.uniform() : rng.uniform(-0.5, 0.5);
      rhs[i] = b[i] = rng.uniform(-1, 1);
      m(i, i) = diag[i];
      if (i > 0) m(i, i - 1) = sub[i];
      if (i < n - 1) m(i, i + 1) = sup[i];
    }
    const Eigen::VectorXd x = m.fullPivLu().solve(b);
    solve_tridiagonal(sub, diag, sup, rhs);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(rhs[i], x[i], 1e-9 * (1 + std::abs(x[i])));
  }
}

TEST(Solve, BlackScholesLimit) {
  const MertonParams p{0, 0.2, 0, 0, 0.1};
  const double sd = 0.2;
  GridSpec g{std::log(100.0) - 4 * sd, std::log(100.0) + 4 * sd, 1.0, 800, 400, 1.0};
  const auto surf = solve(p, OptionKind::Call, ExerciseStyle::European, 100, 0.05, g);
  EXPECT_NEAR(interpolate(surf, 100, 0), 10.450584, 0.02);
}

TEST(Solve, MatchesCanonicalSeriesAndConverges) {
  const OptionSpec spec{100, 100, 0.5, 0.03};
  const double exact = price_european_canonical(kSpy, spec);
  const double e1 = std::abs(pide_price(kSpy, spec, 600, 300) - exact);
  const double e2 = std::abs(pide_price(kSpy, spec, 1200, 600) - exact);
  EXPECT_LT(e1 / exact, 0.005);
  EXPECT_GE(e1 / e2, 1.7);
}

TEST(Solve, AmericanCallEqualsEuropeanWithoutDividends) {
  OptionSpec spec{100, 100, 1.0, 0.05};
  const double eu = pide_price(kSpy, spec, 600, 300);
  spec.style = ExerciseStyle::American;
  EXPECT_NEAR(pide_price(kSpy, spec, 600, 300), eu, 0.02);
}

TEST(Solve, SurfaceInvariants) {
  const double k = 100, r = 0.04;
  for (auto kind : {OptionKind::Call, OptionKind::Put}) {
    const auto g = make_grid(kSpy, k, 1.0, 60, 160, {.n_x = 200, .n_t = 80});
    const auto eu = solve(kSpy, kind, ExerciseStyle::European, k, r, g);
    const auto am = solve(kSpy, kind, ExerciseStyle::American, k, r, g);
    EXPECT_GE(eu.values.minCoeff(), 0.0);
    for (int i = 0; i <= g.n_x; ++i) {
      const double s = std::exp(g.x(i));
      EXPECT_DOUBLE_EQ(eu.values(g.n_t, i), payoff(kind, k, s));
      for (int j = 0; j <= g.n_t; ++j) {
        EXPECT_GE(am.values(j, i), payoff(kind, k, s));
        EXPECT_GE(am.values(j, i), eu.values(j, i));
      }
    }
    for (int j = 0; j <= g.n_t; ++j) {
      const double tau = g.maturity - g.t(j);
      if (kind == OptionKind::Put) {
        EXPECT_NEAR(eu.values(j, 0), k * std::exp(-r * tau) - std::exp(g.x_min), 1e-9);
      } else {
        EXPECT_NEAR(eu.values(j, g.n_x), std::exp(g.x_max) - k * std::exp(-r * tau), 1e-9);
      }
    }
  }
}

TEST(Solve, AmericanPutIncreasesWithMaturity) {
  const double k = 100;
  GridSpec g1{std::log(k) - 1.2, std::log(k) + 1.2, default_extension(kSpy), 300, 60, 0.5};
  GridSpec g2 = g1;
  g2.maturity = 1.0;
  g2.n_t = 120;
  const auto short_t = solve(kSpy, OptionKind::Put, ExerciseStyle::American, k, 0.03, g1);
  const auto long_t = solve(kSpy, OptionKind::Put, ExerciseStyle::American, k, 0.03, g2);
  for (double s : {50.0, 80.0, 95.0, 100.0, 110.0, 150.0}) {
    EXPECT_GE(interpolate(long_t, s, 0.0), interpolate(short_t, s, 0.0) - 1e-12) << s;
  }
}

TEST(Solve, Diagnostics) {
  GridSpec coarse{std::log(100.0) - 1, std::log(100.0) + 1, 1.0, 8, 4, 1.0};
  const auto surf = solve(kSpy, OptionKind::Call, ExerciseStyle::European, 100, 0.03, coarse);
  EXPECT_FALSE(surf.warnings.empty());
  EXPECT_THROW(solve(kSpy, OptionKind::Call, ExerciseStyle::European, 1000, 0.03, coarse), ValidationError);
}

TEST(Interpolate, NodesMaturityMidpointsAndDomain) {
  const auto g = make_grid(kSpy, 100, 0.5, 100, 100, {.n_x = 100, .n_t = 50});
  const auto surf = solve(kSpy, OptionKind::Put, ExerciseStyle::European, 100, 0.02, g);
  const int i = 37, j = 12;
  EXPECT_NEAR(interpolate(surf, std::exp(g.x(i)), g.t(j)), surf.values(j, i), 1e-10);
  EXPECT_NEAR(interpolate(surf, std::exp(g.x(i)), g.maturity), payoff(OptionKind::Put, 100, std::exp(g.x(i))), 1e-12);
  // off-node the interpolant is linear in x while the payoff is K - e^x
  EXPECT_NEAR(interpolate(surf, 90.0, g.maturity), payoff(OptionKind::Put, 100, 90.0),
              90.0 * std::exp(g.dx()) * g.dx() * g.dx() / 8);
  // the put payoff is linear in S, not in x; a node pair on one side of the kink
  // with time fixed at maturity checks linearity in x of the interpolant
  const double xm = 0.5 * (g.x(i) + g.x(i + 1));
  EXPECT_NEAR(interpolate(surf, std::exp(xm), g.t(j)), 0.5 * (surf.values(j, i) + surf.values(j, i + 1)), 1e-10);
  EXPECT_THROW(interpolate(surf, 1e6, 0.0), ValidationError);
  EXPECT_THROW(interpolate(surf, 100, -0.1), ValidationError);
}
