#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "jdpinn/anneal.hpp"
#include "jdpinn/core.hpp"

namespace jdpinn {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Log returns sampled every `dt` years.
struct ReturnSeries {
  std::vector<double> x;
  double dt = 1.0 / 252.0;

  static constexpr std::size_t kMinLength = 30;
  void validate() const;
};

/// Log returns ln(p[i+1] / p[i]) of a positive price series.
ReturnSeries log_returns(std::span<const double> prices, double dt);

struct AnnealConfig {
  int max_iters = 1000;
  std::uint64_t seed = 42;
  double initial_temp = 5230.0;
  double visiting_param = 2.62;
  double acceptance_param = -5.0;
  double restart_temp_ratio = 2e-5;
  bool local_search = true;
  int truncation_k = 10;  ///< last Poisson term kept in the density series
  double tolerance = 1e-8;
  long max_evals = 10'000'000;

  void validate() const;
};

/// Density of the log return over an interval of `t` years: a Poisson
/// mixture of normals truncated after `k_max` jumps.
double merton_density(const MertonParams& params, double x, double t, int k_max);

/// -sum log f(x_i), with each density floored at 1e-300.
double neg_log_likelihood(const MertonParams& params, const ReturnSeries& series, int k_max);

struct CalibrationResult {
  MertonParams params;
  double objective = 0.0;
  int iterations = 0;
  long evaluations = 0;
  std::string message;
};

/// Maximum-likelihood fit by dual annealing over `bounds`. Deterministic for
/// a given seed; throws CalibrationError on a zero-variance series.
CalibrationResult calibrate(const ReturnSeries& series, const ParamBounds& bounds,
                            const AnnealConfig& cfg = {});

}  // namespace jdpinn
