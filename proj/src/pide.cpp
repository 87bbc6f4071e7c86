#include "jdpinn/pide.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "jdpinn/analytical.hpp"

namespace jdpinn {

void GridSpec::validate() const {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max)) {
    throw ValidationError("GridSpec: need finite x_min < x_max");
  }
  if (!(ext > 0.0) || !std::isfinite(ext)) throw ValidationError("GridSpec: ext must be > 0");
  if (n_x < 8) throw ValidationError("GridSpec: n_x must be >= 8");
  if (n_t < 4) throw ValidationError("GridSpec: n_t must be >= 4");
  if (!(maturity > 0.0) || !std::isfinite(maturity)) throw ValidationError("GridSpec: maturity must be > 0");
}

int GridSpec::ext_nodes() const { return static_cast<int>(std::ceil(ext / dx() - 1e-9)); }

double levy_density(const MertonParams& params, double y) {
  const double z = (y - params.mu_y) / params.sigma_y;
  return params.lambda * std::exp(-0.5 * z * z) / (params.sigma_y * std::sqrt(2.0 * std::numbers::pi));
}

ImexCoefficients imex_coefficients(const MertonParams& params, double rate, double dx, double dt) {
  if (!(dx > 0.0) || !(dt > 0.0)) throw ValidationError("imex_coefficients: dx and dt must be > 0");
  const double s2 = params.sigma * params.sigma;
  ImexCoefficients c;
  c.gamma = rate - 0.5 * s2 - params.lambda * jump_compensator(params);
  c.a = 0.5 * dt * (s2 / (dx * dx) - c.gamma / dx);
  c.b = 1.0 + dt * (s2 / (dx * dx) + rate + params.lambda);
  c.c = 0.5 * dt * (s2 / (dx * dx) + c.gamma / dx);
  return c;
}

double default_extension(const MertonParams& params) {
  return std::max(6.0 * params.sigma_y + std::abs(params.mu_y), 1.0);
}

GridSpec make_grid(const MertonParams& params, double strike, double tau, double s_lo, double s_hi,
                   const GridOptions& opts) {
  params.validate();
  if (!(strike > 0.0) || !(tau > 0.0) || !(s_lo > 0.0) || !(s_hi >= s_lo)) {
    throw ValidationError("make_grid: need strike > 0, tau > 0 and 0 < s_lo <= s_hi");
  }
  const double var = params.sigma * params.sigma +
                     params.lambda * (params.mu_y * params.mu_y + params.sigma_y * params.sigma_y);
  const double spread = opts.width_sd * std::sqrt(var * tau);
  const double moneyness = std::max(std::abs(std::log(s_lo / strike)), std::abs(std::log(s_hi / strike)));
  const double half = std::max(opts.min_half_width, moneyness + spread);
  GridSpec g;
  g.x_min = std::log(strike) - half;
  g.x_max = std::log(strike) + half;
  g.ext = default_extension(params);
  g.n_x = opts.n_x;
  g.n_t = opts.n_t;
  g.maturity = tau;
  return g;
}

double boundary_value(OptionKind kind, ExerciseStyle style, double strike, double rate, double maturity,
                      double x, double t) {
  const double s = std::exp(x);
  const double disc_strike = strike * std::exp(-rate * (maturity - t));
  double v = kind == OptionKind::Call ? std::max(s - disc_strike, 0.0) : std::max(disc_strike - s, 0.0);
  if (style == ExerciseStyle::American) v = std::max(v, payoff(kind, strike, s));
  return v;
}

std::vector<double> jump_kernel(const MertonParams& params, double dx, int half) {
  std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
  for (int k = -half; k <= half; ++k) w[static_cast<std::size_t>(k + half)] = levy_density(params, k * dx) * dx;
  return w;
}

namespace {

// The FFTW planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

struct JumpConvolver::Impl {
  std::size_t half = 0;
  std::size_t signal_length = 0;
  std::size_t n = 0;
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  std::vector<std::complex<double>> kernel_spectrum;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (real) fftw_free(real);
    if (spectrum) fftw_free(spectrum);
  }
};

JumpConvolver::JumpConvolver(std::span<const double> kernel, std::size_t signal_length)
    : impl_(std::make_unique<Impl>()) {
  if (kernel.size() % 2 != 1) throw ValidationError("JumpConvolver: kernel length must be odd");
  auto& s = *impl_;
  s.half = kernel.size() / 2;
  s.signal_length = signal_length;
  if (signal_length < kernel.size()) throw ValidationError("JumpConvolver: signal shorter than kernel");
  s.n = next_pow2(signal_length + kernel.size());
  const std::size_t nc = s.n / 2 + 1;
  {
    std::lock_guard lock(planner_mutex());
    s.real = fftw_alloc_real(s.n);
    s.spectrum = fftw_alloc_complex(nc);
    s.forward = fftw_plan_dft_r2c_1d(static_cast<int>(s.n), s.real, s.spectrum, FFTW_ESTIMATE);
    s.backward = fftw_plan_dft_c2r_1d(static_cast<int>(s.n), s.spectrum, s.real, FFTW_ESTIMATE);
  }
  // reversed kernel turns the correlation sum into a convolution
  std::fill(s.real, s.real + s.n, 0.0);
  for (std::size_t j = 0; j < kernel.size(); ++j) s.real[j] = kernel[kernel.size() - 1 - j];
  fftw_execute(s.forward);
  s.kernel_spectrum.resize(nc);
  for (std::size_t k = 0; k < nc; ++k) s.kernel_spectrum[k] = {s.spectrum[k][0], s.spectrum[k][1]};
}

JumpConvolver::~JumpConvolver() = default;

void JumpConvolver::apply(std::span<const double> signal, std::span<double> out) {
  auto& s = *impl_;
  if (signal.size() != s.signal_length || out.size() != s.signal_length - 2 * s.half) {
    throw ValidationError("JumpConvolver::apply: size mismatch");
  }
  std::copy(signal.begin(), signal.end(), s.real);
  std::fill(s.real + signal.size(), s.real + s.n, 0.0);
  fftw_execute(s.forward);
  const std::size_t nc = s.n / 2 + 1;
  for (std::size_t k = 0; k < nc; ++k) {
    const std::complex<double> v = std::complex<double>(s.spectrum[k][0], s.spectrum[k][1]) * s.kernel_spectrum[k];
    s.spectrum[k][0] = v.real();
    s.spectrum[k][1] = v.imag();
  }
  fftw_execute(s.backward);
  const double scale = 1.0 / static_cast<double>(s.n);
  // full convolution index p = i + 2*half corresponds to output i
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.real[i + 2 * s.half] * scale;
}

void jump_integral_direct(std::span<const double> kernel, std::span<const double> signal, std::span<double> out) {
  const std::size_t half = kernel.size() / 2;
  if (out.size() + 2 * half != signal.size()) throw ValidationError("jump_integral_direct: size mismatch");
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kernel.size(); ++j) acc += kernel[j] * signal[i + j];
    out[i] = acc;
  }
}

void solve_tridiagonal(std::span<const double> sub, std::span<const double> diag, std::span<const double> sup,
                       std::span<double> rhs) {
  const std::size_t n = diag.size();
  if (sub.size() != n || sup.size() != n || rhs.size() != n || n == 0) {
    throw ValidationError("solve_tridiagonal: size mismatch");
  }
  bool dominant = true;
  for (std::size_t i = 0; i < n && dominant; ++i) {
    const double off = (i > 0 ? std::abs(sub[i]) : 0.0) + (i + 1 < n ? std::abs(sup[i]) : 0.0);
    dominant = std::abs(diag[i]) > off;
  }

  if (dominant) {
    std::vector<double> c(n);
    c[0] = sup[0] / diag[0];
    rhs[0] /= diag[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double m = diag[i] - sub[i] * c[i - 1];
      c[i] = i + 1 < n ? sup[i] / m : 0.0;
      rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
    return;
  }

  // LAPACK dgtsv-style elimination; dl doubles as the second super-diagonal.
  std::vector<double> dl(n > 1 ? n - 1 : 0), d(diag.begin(), diag.end()), du(n > 1 ? n - 1 : 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    dl[i] = sub[i + 1];
    du[i] = sup[i];
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) throw std::runtime_error("solve_tridiagonal: singular matrix");
      const double fact = dl[i] / d[i];
      d[i + 1] -= fact * du[i];
      rhs[i + 1] -= fact * rhs[i];
      dl[i] = 0.0;
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      const double temp = d[i + 1];
      d[i + 1] = du[i] - fact * temp;
      if (i + 2 < n) {
        dl[i] = du[i + 1];
        du[i + 1] = -fact * dl[i];
      } else {
        dl[i] = 0.0;
      }
      du[i] = temp;
      const double tb = rhs[i];
      rhs[i] = rhs[i + 1];
      rhs[i + 1] = tb - fact * rhs[i + 1];
    }
  }
  if (d[n - 1] == 0.0) throw std::runtime_error("solve_tridiagonal: singular matrix");
  rhs[n - 1] /= d[n - 1];
  if (n > 1) rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
  for (std::size_t i = n - 2; i-- > 0;) rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - dl[i] * rhs[i + 2]) / d[i];
}

ValueSurface solve(const MertonParams& params, OptionKind kind, ExerciseStyle style, double strike, double rate,
                   const GridSpec& grid) {
  params.validate();
  grid.validate();
  if (!(strike > 0.0) || !std::isfinite(rate)) throw ValidationError("pide::solve: need strike > 0 and finite rate");
  const double log_k = std::log(strike);
  if (log_k < grid.x_min || log_k > grid.x_max) {
    throw ValidationError("pide::solve: strike lies outside the grid's core domain");
  }

  ValueSurface surf;
  surf.grid = grid;
  surf.kind = kind;
  surf.style = style;
  surf.strike = strike;
  surf.rate = rate;

  const int nx = grid.n_x, nt = grid.n_t;
  const double dx = grid.dx(), dt = grid.dt(), T = grid.maturity;
  if (dx > params.sigma_y) {
    surf.warnings.push_back("grid too coarse for the jump kernel: dx = " + std::to_string(dx) +
                            " > sigma_y = " + std::to_string(params.sigma_y));
  }
  const auto coef = imex_coefficients(params, rate, dx, dt);
  if (coef.a < 0.0 || coef.c < 0.0) {
    surf.warnings.push_back("central drift discretization is not monotone on this grid (negative off-diagonal)");
  }

  const int m = grid.ext_nodes();
  const std::size_t core = static_cast<std::size_t>(nx) + 1;
  const std::size_t total = core + 2 * static_cast<std::size_t>(m);
  const auto kernel = jump_kernel(params, dx, m);
  JumpConvolver conv(kernel, total);

  std::vector<double> xs(total), pay(total);
  for (std::size_t p = 0; p < total; ++p) {
    xs[p] = grid.x_min + (static_cast<double>(p) - m) * dx;
    pay[p] = payoff(kind, strike, std::exp(xs[p]));
  }

  surf.values.resize(nt + 1, static_cast<Eigen::Index>(core));
  std::vector<double> ext(total), jump(core), rhs(core - 2);
  std::vector<double> sub(core - 2, -coef.a), diag(core - 2, coef.b), sup(core - 2, -coef.c);
  for (std::size_t i = 0; i < core; ++i) surf.values(nt, static_cast<Eigen::Index>(i)) = pay[i + m];

  // One implicit-explicit step of the linear operator. `bc(x, t)` supplies the
  // Dirichlet and extension values; the result lands in rhs (interior nodes).
  const auto step = [&](const std::vector<double>& prev, const auto& bc, double t_next, double t_now) {
    for (std::size_t i = 0; i < core; ++i) ext[i + m] = prev[i];
    for (int p = 0; p < m; ++p) {
      const std::size_t q = total - 1 - static_cast<std::size_t>(p);
      ext[static_cast<std::size_t>(p)] = bc(xs[static_cast<std::size_t>(p)], t_next);
      ext[q] = bc(xs[q], t_next);
    }
    conv.apply(ext, jump);
    for (std::size_t i = 1; i + 1 < core; ++i) rhs[i - 1] = ext[i + m] + dt * jump[i];
    rhs.front() += coef.a * bc(grid.x_min, t_now);
    rhs.back() += coef.c * bc(grid.x_max, t_now);
    solve_tridiagonal(sub, diag, sup, rhs);
  };
  const auto european_bc = [&](double x, double t) {
    return boundary_value(kind, ExerciseStyle::European, strike, rate, T, x, t);
  };
  // early-exercise premium on the boundary and in the extension
  const auto premium_bc = [&](double x, double t) {
    return boundary_value(kind, ExerciseStyle::American, strike, rate, T, x, t) - european_bc(x, t);
  };

  // American values are carried as European value plus a premium that is
  // never negative. In exact arithmetic this is the plain projected scheme
  // (the step is linear and monotone); in floating point it makes
  // American >= European hold nodewise despite FFT roundoff.
  std::vector<double> euro(pay.begin() + m, pay.begin() + m + static_cast<std::ptrdiff_t>(core));
  std::vector<double> prem(core, 0.0);
  const bool american = style == ExerciseStyle::American;
  for (int j = nt - 1; j >= 0; --j) {
    const double t_next = grid.t(j + 1), t_now = grid.t(j);
    step(euro, european_bc, t_next, t_now);
    euro.front() = european_bc(grid.x_min, t_now);
    euro.back() = european_bc(grid.x_max, t_now);
    // FFT roundoff leaves ~1e-14 negatives far out of the money
    for (std::size_t i = 1; i + 1 < core; ++i) euro[i] = std::max(rhs[i - 1], 0.0);

    auto row = surf.values.row(j);
    if (!american) {
      for (std::size_t i = 0; i < core; ++i) row(static_cast<Eigen::Index>(i)) = euro[i];
      continue;
    }
    step(prem, premium_bc, t_next, t_now);
    row(0) = boundary_value(kind, style, strike, rate, T, grid.x_min, t_now);
    row(static_cast<Eigen::Index>(core - 1)) = boundary_value(kind, style, strike, rate, T, grid.x_max, t_now);
    for (std::size_t i = 1; i + 1 < core; ++i) {
      row(static_cast<Eigen::Index>(i)) = std::max(euro[i] + std::max(rhs[i - 1], 0.0), pay[i + m]);
    }
    for (std::size_t i = 0; i < core; ++i) prem[i] = row(static_cast<Eigen::Index>(i)) - euro[i];
  }
  return surf;
}

double interpolate(const ValueSurface& surface, double spot, double t) {
  const auto& g = surface.grid;
  if (!(spot > 0.0)) throw ValidationError("interpolate: spot must be > 0");
  const double x = std::log(spot);
  const double tol = 1e-12 * std::max(1.0, std::abs(g.x_max));
  if (x < g.x_min - tol || x > g.x_max + tol || t < -1e-12 || t > g.maturity + 1e-12) {
    throw ValidationError("interpolate: query (S=" + std::to_string(spot) + ", t=" + std::to_string(t) +
                          ") outside the solved domain");
  }
  const double fx = std::clamp((x - g.x_min) / g.dx(), 0.0, static_cast<double>(g.n_x));
  const double ft = std::clamp(t / g.dt(), 0.0, static_cast<double>(g.n_t));
  const int i0 = std::min(static_cast<int>(fx), g.n_x - 1);
  const int j0 = std::min(static_cast<int>(ft), g.n_t - 1);
  const double wx = fx - i0, wt = ft - j0;
  const auto& v = surface.values;
  return (1 - wt) * ((1 - wx) * v(j0, i0) + wx * v(j0, i0 + 1)) + wt * ((1 - wx) * v(j0 + 1, i0) + wx * v(j0 + 1, i0 + 1));
}

}  // namespace jdpinn
