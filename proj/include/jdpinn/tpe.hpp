#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "jdpinn/core.hpp"

namespace jdpinn {

/// Tree-structured Parzen estimator over a box of strictly positive
/// coordinates. Densities are fitted on log-transformed coordinates.
struct TpeConfig {
  std::vector<Interval> bounds;
  int n_trials = 50;
  int n_startup = 10;
  double gamma = 0.25;  ///< fraction of trials counted as "good"
  int n_candidates = 64;
  std::uint64_t seed = 42;

  void validate() const;
};

struct TpeTrial {
  int index = 0;
  std::vector<double> x;
  double value = 0.0;  ///< +inf marks a failed trial
  double best_so_far = 0.0;
};

/// Minimizes `objective`. A trial whose objective throws or returns a
/// non-finite value is logged with value +inf. Throws std::runtime_error when
/// every trial failed.
std::vector<TpeTrial> tpe_minimize(const std::function<double(std::span<const double>)>& objective,
                                   const TpeConfig& cfg);

/// Index of the trial with the lowest value (first on ties).
std::size_t best_trial(const std::vector<TpeTrial>& trials);

}  // namespace jdpinn
