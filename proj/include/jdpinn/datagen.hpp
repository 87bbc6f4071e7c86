#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jdpinn/core.hpp"
#include "jdpinn/pide.hpp"

namespace jdpinn {

/// Uniform sampling ranges for synthetic quotes. The strike is drawn as a
/// multiple of the sampled spot.
struct SamplerRanges {
  Interval spot{200.0, 500.0};
  Interval strike_ratio{0.5, 1.5};
  Interval tau{0.02, 2.0};
  Interval rate{0.0, 0.05};
  int n_samples = 20000;
  OptionKind kind = OptionKind::Call;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SynthOptions {
  GridOptions grid;
  int max_retries = 8;
  double train_frac = 0.70;
  double val_frac = 0.15;
  unsigned threads = 0;  ///< 0 = hardware concurrency
};

/// American PIDE price at (spec.spot, t = 0) on the grid that data generation
/// would use for a batch holding only this spec.
double label_price(const MertonParams& params, const OptionSpec& spec, const GridOptions& grid = {});

/// Samples `ranges.n_samples` specs, labels each with the American PIDE price
/// and tags rows train/val/test. Specs sharing (K, T, r) share one surface.
/// Row order follows sample index, so the result is independent of threading.
QuoteDataset generate_synthetic(const MertonParams& params, const SamplerRanges& ranges,
                                const SynthOptions& opts = {});

struct RejectedRow {
  std::size_t line = 0;  ///< 1-based line number in the file
  std::string reason;
};

struct LoadResult {
  QuoteDataset data;
  std::vector<RejectedRow> rejected;
  std::vector<std::string> warnings;
  bool had_split_column = false;
};

/// Reads either the dataset schema (`underlying,strike,tau,rate,kind,price`
/// with optional `split` and `style` columns) or a raw quote file carrying
/// `bid,ask` instead of `price`, in which case the price is the midpoint.
/// Columns are matched by header name. Rows without a split column are tagged
/// 70/15/15 with `split_seed`. Rows default to American style.
LoadResult load_market_csv(const std::filesystem::path& path, std::uint64_t split_seed = 42);

/// Indices of round(ratio * n) rows drawn without replacement, ascending.
std::vector<std::size_t> subsample_indices(std::size_t n, double ratio, std::uint64_t seed);

/// Uniform row subsample keeping each row's split tag and original order.
QuoteDataset subsample(const QuoteDataset& data, double ratio, std::uint64_t seed);

}  // namespace jdpinn
