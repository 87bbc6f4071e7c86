#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jdpinn {

using Objective = std::function<double(std::span<const double>)>;

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  void validate() const;
  bool contains(std::span<const double> x) const;
};

struct NelderMeadOptions {
  int max_iters = 200;
  double xtol = 1e-10;
  double ftol = 1e-10;
  double initial_step = 0.05;  ///< simplex edge as a fraction of the box width
};

struct LocalResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

/// Nelder-Mead restricted to a box by projecting every trial vertex onto it.
LocalResult nelder_mead_bounded(const Objective& f, const Box& box, std::span<const double> x0,
                                const NelderMeadOptions& opts = {});

/// Generalized simulated annealing (Tsallis visiting distribution, generalized
/// Metropolis acceptance, reannealing) followed by optional local refinement.
struct AnnealOptions {
  int max_iters = 1000;
  std::uint64_t seed = 42;
  double initial_temp = 5230.0;
  double visiting_param = 2.62;
  double acceptance_param = -5.0;
  double restart_temp_ratio = 2e-5;
  bool local_search = true;
  /// Stop at a reannealing boundary when the cycle improved the best value by
  /// less than this.
  double tolerance = 1e-8;
  long max_evals = 10'000'000;
  bool record_accepted = false;
};

struct AnnealResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  long evaluations = 0;
  int restarts = 0;
  std::string message;
  /// Energies of every accepted move (only when record_accepted is set).
  std::vector<double> accepted;
};

AnnealResult dual_annealing(const Objective& f, const Box& box, const AnnealOptions& opts,
                            std::optional<std::vector<double>> x0 = std::nullopt);

}  // namespace jdpinn
