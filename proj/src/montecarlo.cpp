#include "jdpinn/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include "jdpinn/analytical.hpp"
#include "jdpinn/parallel.hpp"
#include "jdpinn/rng.hpp"

namespace jdpinn {

namespace {

constexpr std::size_t kBlockPaths = 4096;

/// One exact log increment over dt.
struct StepLaw {
  double drift_dt;
  double vol_sqrt_dt;
  double jump_mean;
  double mu_y;
  double sigma_y;

  StepLaw(const MertonParams& p, double mu_eff, double dt)
      : drift_dt((mu_eff - p.lambda * jump_compensator(p) - 0.5 * p.sigma * p.sigma) * dt),
        vol_sqrt_dt(p.sigma * std::sqrt(dt)),
        jump_mean(p.lambda * dt),
        mu_y(p.mu_y),
        sigma_y(p.sigma_y) {}

  double draw(Rng& rng) const {
    double inc = drift_dt + vol_sqrt_dt * rng.normal();
    const auto jumps = rng.poisson(jump_mean);
    for (std::uint64_t j = 0; j < jumps; ++j) inc += rng.normal(mu_y, sigma_y);
    return inc;
  }
};

std::size_t block_count(std::size_t n) { return (n + kBlockPaths - 1) / kBlockPaths; }

}  // namespace

void PathConfig::validate() const {
  if (!(s0 > 0.0) || !std::isfinite(s0)) throw ValidationError("PathConfig: s0 must be > 0");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("PathConfig: horizon must be > 0");
  if (steps < 1) throw ValidationError("PathConfig: steps must be >= 1");
  if (n_paths < 1) throw ValidationError("PathConfig: n_paths must be >= 1");
  if (!std::isfinite(rate)) throw ValidationError("PathConfig: rate must be finite");
}

double effective_drift(const MertonParams& params, const PathConfig& cfg) {
  if (cfg.measure == Measure::RealWorld) return params.mu;
  return risk_neutral_drift(params, cfg.rate) + params.lambda * jump_compensator(params);
}

PathMatrix simulate_paths(const MertonParams& params, const PathConfig& cfg) {
  params.validate();
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_paths);
  const auto steps = static_cast<std::size_t>(cfg.steps);
  const StepLaw law(params, effective_drift(params, cfg), cfg.horizon / static_cast<double>(steps));
  const double log_s0 = std::log(cfg.s0);

  PathMatrix paths(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(steps + 1));
  parallel_for(block_count(n), [&](std::size_t b) {
    Rng rng(derive_seed(cfg.seed, b));
    const std::size_t end = std::min(n, (b + 1) * kBlockPaths);
    for (std::size_t p = b * kBlockPaths; p < end; ++p) {
      double x = log_s0;
      auto row = paths.row(static_cast<Eigen::Index>(p));
      row(0) = cfg.s0;
      for (std::size_t s = 1; s <= steps; ++s) {
        x += law.draw(rng);
        row(static_cast<Eigen::Index>(s)) = std::exp(x);
      }
    }
  });
  return paths;
}

std::vector<double> simulate_terminal(const MertonParams& params, const PathConfig& cfg) {
  params.validate();
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_paths);
  const StepLaw law(params, effective_drift(params, cfg), cfg.horizon);
  std::vector<double> out(n);
  parallel_for(block_count(n), [&](std::size_t b) {
    Rng rng(derive_seed(cfg.seed, b));
    const std::size_t end = std::min(n, (b + 1) * kBlockPaths);
    for (std::size_t p = b * kBlockPaths; p < end; ++p) out[p] = cfg.s0 * std::exp(law.draw(rng));
  });
  return out;
}

McEstimate mc_price_european(const MertonParams& params, const OptionSpec& spec, int n_paths,
                             std::uint64_t seed) {
  spec.validate();
  if (!(spec.tau > 0.0)) throw ValidationError("mc_price_european: tau must be > 0");
  PathConfig cfg;
  cfg.s0 = spec.spot;
  cfg.horizon = spec.tau;
  cfg.steps = 1;
  cfg.n_paths = n_paths;
  cfg.seed = seed;
  cfg.measure = Measure::RiskNeutral;
  cfg.rate = spec.rate;
  const auto terminal = simulate_terminal(params, cfg);

  const double df = std::exp(-spec.rate * spec.tau);
  double sum = 0.0, sum_sq = 0.0;
  for (double s : terminal) {
    const double v = df * payoff(spec, s);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(terminal.size());
  const double mean = sum / n;
  const double var = n > 1.0 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

namespace {

std::vector<double> pooled_log_returns(const PathMatrix& paths) {
  std::vector<double> r;
  if (paths.cols() < 2) return r;
  r.reserve(static_cast<std::size_t>(paths.rows() * (paths.cols() - 1)));
  for (Eigen::Index i = 0; i < paths.rows(); ++i) {
    for (Eigen::Index j = 1; j < paths.cols(); ++j) r.push_back(std::log(paths(i, j) / paths(i, j - 1)));
  }
  return r;
}

}  // namespace

Histogram log_return_histogram(const PathMatrix& paths, int bins) {
  if (bins < 2) throw ValidationError("log_return_histogram: bins must be >= 2");
  const auto r = pooled_log_returns(paths);
  if (r.empty()) throw ValidationError("log_return_histogram: need at least two columns");
  auto [lo_it, hi_it] = std::minmax_element(r.begin(), r.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo <= 0.0) {
    // degenerate sample: centre a unit-mass bin on the value
    const double half = std::max(std::abs(lo), 1.0) * 1e-6;
    lo -= half * bins;
    hi += half * bins;
  }
  Histogram h;
  const double width = (hi - lo) / bins;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + b * width;
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double v : r) {
    auto b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  h.density.resize(counts.size());
  const double norm = static_cast<double>(r.size()) * width;
  for (std::size_t b = 0; b < counts.size(); ++b) h.density[b] = counts[b] / norm;
  return h;
}

double excess_kurtosis(const PathMatrix& paths) {
  const auto r = pooled_log_returns(paths);
  if (r.size() < 4) throw ValidationError("excess_kurtosis: too few returns");
  const double n = static_cast<double>(r.size());
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : r) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 3.0;
}

}  // namespace jdpinn
