#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "jdpinn/core.hpp"

namespace jdpinn {

enum class Measure { RealWorld, RiskNeutral };

struct PathConfig {
  double s0 = 100.0;
  double horizon = 1.0;  ///< years
  int steps = 252;
  int n_paths = 1;
  std::uint64_t seed = 42;
  Measure measure = Measure::RealWorld;
  double rate = 0.0;  ///< used under RiskNeutral only

  void validate() const;
};

/// Row-major so each path is contiguous.
using PathMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Drift mu_eff of the simulated price: mu under RealWorld, the pricing-measure
/// drift r - lambda k plus the compensator lambda k (i.e. r) under RiskNeutral.
double effective_drift(const MertonParams& params, const PathConfig& cfg);

/// Exact simulation on a uniform time grid: Gaussian diffusion increment plus a
/// Poisson number of lognormal jumps per step. Paths are generated in blocks
/// whose seeds derive from (seed, block), so results do not depend on threading.
PathMatrix simulate_paths(const MertonParams& params, const PathConfig& cfg);

struct McEstimate {
  double price = 0.0;
  double std_error = 0.0;
};

/// Discounted mean payoff over terminal prices simulated in one exact step
/// under the pricing measure.
McEstimate mc_price_european(const MertonParams& params, const OptionSpec& spec, int n_paths,
                             std::uint64_t seed);

/// Terminal prices only (one exact step), used by the pricing oracle and
/// martingale checks without materialising whole paths.
std::vector<double> simulate_terminal(const MertonParams& params, const PathConfig& cfg);

struct Histogram {
  std::vector<double> edges;    ///< bins + 1 edges
  std::vector<double> density;  ///< normalized so sum(density * width) == 1
};

/// Pools every per-step log return of every path and bins them. A degenerate
/// (constant) sample puts all mass in one bin.
Histogram log_return_histogram(const PathMatrix& paths, int bins);

/// Sample excess kurtosis of the pooled per-step log returns.
double excess_kurtosis(const PathMatrix& paths);

}  // namespace jdpinn
