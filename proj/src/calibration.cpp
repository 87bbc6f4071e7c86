#include "jdpinn/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace jdpinn {

void ReturnSeries::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("ReturnSeries: dt must be > 0");
  if (x.size() < kMinLength) {
    throw ValidationError("ReturnSeries: need at least " + std::to_string(kMinLength) + " returns, got " +
                          std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("ReturnSeries: non-finite return");
  }
}

ReturnSeries log_returns(std::span<const double> prices, double dt) {
  ReturnSeries out;
  out.dt = dt;
  for (std::size_t i = 0; i + 1 < prices.size(); ++i) {
    if (!(prices[i] > 0.0) || !(prices[i + 1] > 0.0)) {
      throw ValidationError("log_returns: prices must be > 0 (index " + std::to_string(i) + ")");
    }
    out.x.push_back(std::log(prices[i + 1] / prices[i]));
  }
  return out;
}

void AnnealConfig::validate() const {
  if (max_iters < 1) throw ValidationError("AnnealConfig: max_iters must be >= 1");
  if (truncation_k < 1) throw ValidationError("AnnealConfig: truncation_k must be >= 1");
  if (!(initial_temp > 0.0)) throw ValidationError("AnnealConfig: initial_temp must be > 0");
  if (!(restart_temp_ratio > 0.0 && restart_temp_ratio < 1.0)) {
    throw ValidationError("AnnealConfig: restart_temp_ratio must be in (0, 1)");
  }
}

namespace {

/// Per-term constants of the mixture, shared by every observation.
struct MixtureTerms {
  std::vector<double> mean, inv_two_var, log_coef;

  MixtureTerms(const MertonParams& p, double t, int k_max) {
    const double lt = p.lambda * t;
    const double log_lt = lt > 0.0 ? std::log(lt) : 0.0;
    for (int k = 0; k <= k_max; ++k) {
      if (lt == 0.0 && k > 0) break;
      const double var = t * p.sigma * p.sigma + k * p.sigma_y * p.sigma_y;
      const double log_w = -lt + k * log_lt - std::lgamma(k + 1.0);
      mean.push_back(p.mu * t + k * p.mu_y);
      inv_two_var.push_back(0.5 / var);
      log_coef.push_back(log_w - 0.5 * std::log(2.0 * std::numbers::pi * var));
    }
  }

  double density(double x) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const double d = x - mean[k];
      sum += std::exp(log_coef[k] - d * d * inv_two_var[k]);
    }
    return sum;
  }
};

void check_density_args(const MertonParams& params, double t, int k_max) {
  params.validate();
  if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("merton_density: t must be > 0");
  if (k_max < 1) throw ValidationError("merton_density: k_max must be >= 1");
}

}  // namespace

double merton_density(const MertonParams& params, double x, double t, int k_max) {
  check_density_args(params, t, k_max);
  if (!std::isfinite(x)) throw ValidationError("merton_density: x must be finite");
  return MixtureTerms(params, t, k_max).density(x);
}

double neg_log_likelihood(const MertonParams& params, const ReturnSeries& series, int k_max) {
  check_density_args(params, series.dt, k_max);
  const MixtureTerms terms(params, series.dt, k_max);
  double nll = 0.0;
  for (double x : series.x) nll -= std::log(std::max(terms.density(x), 1e-300));
  return nll;
}

CalibrationResult calibrate(const ReturnSeries& series, const ParamBounds& bounds, const AnnealConfig& cfg) {
  series.validate();
  bounds.validate();
  cfg.validate();

  const auto [lo, hi] = std::minmax_element(series.x.begin(), series.x.end());
  if (*hi - *lo <= 0.0) throw CalibrationError("calibrate: return series has zero variance");

  Box box;
  for (const auto& iv : bounds.to_array()) {
    box.lower.push_back(iv.low);
    box.upper.push_back(iv.high);
  }

  const Objective objective = [&](std::span<const double> v) {
    return neg_log_likelihood(MertonParams::from_array(v), series, cfg.truncation_k);
  };

  AnnealOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.seed = cfg.seed;
  opts.initial_temp = cfg.initial_temp;
  opts.visiting_param = cfg.visiting_param;
  opts.acceptance_param = cfg.acceptance_param;
  opts.restart_temp_ratio = cfg.restart_temp_ratio;
  opts.local_search = cfg.local_search;
  opts.tolerance = cfg.tolerance;
  opts.max_evals = cfg.max_evals;

  const auto res = dual_annealing(objective, box, opts);
  if (res.x.empty()) throw CalibrationError("calibrate: no finite objective value found");

  CalibrationResult out;
  out.params = bounds.clamp(MertonParams::from_array(res.x));
  out.objective = res.value;
  out.iterations = res.iterations;
  out.evaluations = res.evaluations;
  out.message = res.message;
  return out;
}

}  // namespace jdpinn
