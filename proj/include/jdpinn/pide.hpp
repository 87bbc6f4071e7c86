#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jdpinn/core.hpp"

namespace jdpinn {

/// Uniform (log-price, time) grid. The core domain is [x_min, x_max] with
/// n_x steps; the jump integral reads an extension of width `ext` on both
/// sides. Time runs from 0 to `maturity` in n_t steps.
struct GridSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  double ext = 1.0;
  int n_x = 600;
  int n_t = 300;
  double maturity = 1.0;

  void validate() const;
  double dx() const { return (x_max - x_min) / n_x; }
  double dt() const { return maturity / n_t; }
  double x(int i) const { return x_min + i * dx(); }
  double t(int j) const { return j * dt(); }
  /// Nodes in each extension strip: ceil(ext / dx).
  int ext_nodes() const;
};

/// Option values V(t_j, x_i): row j is time t_j, column i is node x_i. Row
/// n_t holds the payoff.
struct ValueSurface {
  GridSpec grid;
  OptionKind kind = OptionKind::Call;
  ExerciseStyle style = ExerciseStyle::European;
  double strike = 0.0;
  double rate = 0.0;
  Eigen::MatrixXd values;
  std::vector<std::string> warnings;
};

/// Jump measure density: lambda * Normal(y; mu_y, sigma_y^2).
double levy_density(const MertonParams& params, double y);

struct ImexCoefficients {
  double a = 0.0;  ///< sub-diagonal weight (enters the system as -a)
  double b = 0.0;  ///< diagonal
  double c = 0.0;  ///< super-diagonal weight (enters as -c)
  double gamma = 0.0;
};

/// Coefficients of the implicit tridiagonal system
/// -a V_{i-1} + b V_i - c V_{i+1} = V_i^{next} + dt * J_i.
ImexCoefficients imex_coefficients(const MertonParams& params, double rate, double dx, double dt);

/// Default extension width: wide enough that the discrete jump kernel mass
/// beyond it is negligible.
double default_extension(const MertonParams& params);

struct GridOptions {
  int n_x = 600;
  int n_t = 300;
  double width_sd = 5.0;        ///< half-width in units of total std of log price
  double min_half_width = 0.25; ///< floor on the core half-width (log units)
};

/// Core domain centred on ln K, wide enough to hold every spot in
/// [s_lo, s_hi] plus `width_sd` standard deviations of the log price.
GridSpec make_grid(const MertonParams& params, double strike, double tau, double s_lo, double s_hi,
                   const GridOptions& opts = {});

/// Dirichlet value on the boundary / extension at log price x and time t.
double boundary_value(OptionKind kind, ExerciseStyle style, double strike, double rate, double maturity,
                      double x, double t);

/// Backward IMEX time stepping: implicit tridiagonal diffusion/drift/discount,
/// explicit jump integral by FFT convolution over the extended grid, and for
/// American style a projection onto the payoff after every step. American
/// values are stepped as European value plus a non-negative premium so that
/// American >= European holds nodewise in floating point.
ValueSurface solve(const MertonParams& params, OptionKind kind, ExerciseStyle style, double strike,
                   double rate, const GridSpec& grid);

/// Bilinear interpolation in (ln S, t). Throws ValidationError outside the
/// core domain.
double interpolate(const ValueSurface& surface, double spot, double t);

// ---- building blocks, exposed for testing ---------------------------------

/// Discrete kernel w_k = nu(k dx) dx for k = -half..half.
std::vector<double> jump_kernel(const MertonParams& params, double dx, int half);

/// Computes J_i = sum_k w_k v[i + half + k] for every i in [0, v.size() - 2*half)
/// via FFT. Plans and buffers are reused across calls with the same sizes.
class JumpConvolver {
 public:
  JumpConvolver(std::span<const double> kernel, std::size_t signal_length);
  ~JumpConvolver();
  JumpConvolver(const JumpConvolver&) = delete;
  JumpConvolver& operator=(const JumpConvolver&) = delete;

  void apply(std::span<const double> signal, std::span<double> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Same sum evaluated directly in O(n * kernel).
void jump_integral_direct(std::span<const double> kernel, std::span<const double> signal, std::span<double> out);

/// Solves the tridiagonal system (sub, diag, sup) x = rhs in place of rhs.
/// Uses the Thomas algorithm when the matrix is diagonally dominant and
/// Gaussian elimination with partial pivoting otherwise.
void solve_tridiagonal(std::span<const double> sub, std::span<const double> diag, std::span<const double> sup,
                       std::span<double> rhs);

}  // namespace jdpinn
