#include "jdpinn/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "jdpinn/rng.hpp"

namespace jdpinn {

void TpeConfig::validate() const {
  if (bounds.empty()) throw ValidationError("TpeConfig: need at least one coordinate");
  for (const auto& b : bounds) {
    if (!(b.low > 0.0) || !(b.high > b.low) || !std::isfinite(b.high)) {
      throw ValidationError("TpeConfig: bounds must satisfy 0 < low < high");
    }
  }
  if (n_startup < 2) throw ValidationError("TpeConfig: n_startup must be >= 2");
  if (n_trials < n_startup) throw ValidationError("TpeConfig: n_trials must be >= n_startup");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("TpeConfig: gamma must be in (0, 1)");
  if (n_candidates < 1) throw ValidationError("TpeConfig: n_candidates must be >= 1");
}

namespace {

/// One-dimensional Parzen estimator on [lo, hi]: Gaussian kernels truncated
/// to the interval plus a uniform prior component. Truncating instead of
/// clamping keeps proposals from piling up on the bounds.
struct Parzen {
  std::vector<double> centres;
  std::vector<double> log_mass;  ///< log of each kernel's mass inside [lo, hi]
  double bandwidth = 1.0;
  double lo = 0.0, hi = 1.0;

  Parzen(std::vector<double> pts, double lo_, double hi_) : centres(std::move(pts)), lo(lo_), hi(hi_) {
    const double range = hi - lo;
    const auto m = static_cast<double>(centres.size());
    double sd = 0.0;
    if (centres.size() > 1) {
      const double mean = std::accumulate(centres.begin(), centres.end(), 0.0) / m;
      for (double c : centres) sd += (c - mean) * (c - mean);
      sd = std::sqrt(sd / (m - 1.0));
    }
    bandwidth = 1.06 * sd * std::pow(std::max(m, 1.0), -0.2);
    // floor from hyperopt's "magic clip": a few clustered points must not
    // collapse the kernels, or the search stops moving
    bandwidth = std::clamp(bandwidth, range / std::min(100.0, 1.0 + m), range);
    const auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
    for (double c : centres) {
      log_mass.push_back(std::log(std::max(cdf((hi - c) / bandwidth) - cdf((lo - c) / bandwidth), 1e-300)));
    }
  }

  double log_pdf(double u) const {
    const double log_norm = -std::log(bandwidth * std::sqrt(2.0 * std::numbers::pi));
    double sum = 1.0 / (hi - lo);
    for (std::size_t k = 0; k < centres.size(); ++k) {
      const double z = (u - centres[k]) / bandwidth;
      sum += std::exp(log_norm - 0.5 * z * z - log_mass[k]);
    }
    return std::log(sum / (static_cast<double>(centres.size()) + 1.0));
  }

  double sample(Rng& rng) const {
    const auto pick = rng.below(centres.size() + 1);
    if (pick == centres.size()) return rng.uniform(lo, hi);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double v = centres[pick] + bandwidth * rng.normal();
      if (v >= lo && v <= hi) return v;
    }
    return rng.uniform(lo, hi);  // kernel almost entirely outside: fall back to the prior
  }
};

}  // namespace

std::size_t best_trial(const std::vector<TpeTrial>& trials) {
  if (trials.empty()) throw ValidationError("best_trial: no trials");
  std::size_t best = 0;
  for (std::size_t i = 1; i < trials.size(); ++i) {
    if (trials[i].value < trials[best].value) best = i;
  }
  return best;
}

std::vector<TpeTrial> tpe_minimize(const std::function<double(std::span<const double>)>& objective,
                                   const TpeConfig& cfg) {
  cfg.validate();
  const std::size_t dim = cfg.bounds.size();
  std::vector<double> log_lo(dim), log_hi(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    log_lo[d] = std::log(cfg.bounds[d].low);
    log_hi[d] = std::log(cfg.bounds[d].high);
  }
  Rng rng(cfg.seed);
  std::vector<TpeTrial> trials;
  double best = std::numeric_limits<double>::infinity();

  for (int t = 0; t < cfg.n_trials; ++t) {
    std::vector<double> x(dim);
    if (t < cfg.n_startup) {
      for (std::size_t d = 0; d < dim; ++d) x[d] = std::exp(rng.uniform(log_lo[d], log_hi[d]));  // log-uniform, the space the densities live in
    } else {
      std::vector<std::size_t> order(trials.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return trials[a].value < trials[b].value; });
      const auto n_good = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(cfg.gamma * static_cast<double>(trials.size()))));
      std::vector<Parzen> good, bad;
      for (std::size_t d = 0; d < dim; ++d) {
        std::vector<double> g, b;
        for (std::size_t k = 0; k < order.size(); ++k) {
          const double u = std::log(trials[order[k]].x[d]);
          (k < n_good && std::isfinite(trials[order[k]].value) ? g : b).push_back(u);
        }
        good.emplace_back(std::move(g), log_lo[d], log_hi[d]);
        bad.emplace_back(std::move(b), log_lo[d], log_hi[d]);
      }
      double best_score = -std::numeric_limits<double>::infinity();
      std::vector<double> cand(dim);
      for (int c = 0; c < cfg.n_candidates; ++c) {
        double score = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          cand[d] = good[d].sample(rng);
          score += good[d].log_pdf(cand[d]) - bad[d].log_pdf(cand[d]);
        }
        if (score > best_score) {
          best_score = score;
          for (std::size_t d = 0; d < dim; ++d) x[d] = std::exp(cand[d]);
        }
      }
      for (std::size_t d = 0; d < dim; ++d) x[d] = cfg.bounds[d].clamp(x[d]);
    }

    double value = std::numeric_limits<double>::infinity();
    try {
      value = objective(x);
      if (!std::isfinite(value)) value = std::numeric_limits<double>::infinity();
    } catch (const std::exception&) {
      value = std::numeric_limits<double>::infinity();
    }
    best = std::min(best, value);
    trials.push_back({t, std::move(x), value, best});
  }
  if (!std::isfinite(best)) throw std::runtime_error("tpe_minimize: every trial failed");
  return trials;
}

}  // namespace jdpinn
