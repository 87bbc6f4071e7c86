#include "jdpinn/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <tuple>
#include <unordered_map>

#include "jdpinn/parallel.hpp"
#include "jdpinn/rng.hpp"

namespace jdpinn {

void SamplerRanges::validate() const {
  const auto check = [](const Interval& iv, const char* name) {
    if (!std::isfinite(iv.low) || !std::isfinite(iv.high) || !(iv.low < iv.high)) {
      throw ValidationError(std::string("SamplerRanges: ") + name + " needs finite low < high");
    }
  };
  check(spot, "spot");
  check(strike_ratio, "strike_ratio");
  check(tau, "tau");
  check(rate, "rate");
  if (!(spot.low > 0.0)) throw ValidationError("SamplerRanges: spot low must be > 0");
  if (!(strike_ratio.low > 0.0)) throw ValidationError("SamplerRanges: strike_ratio low must be > 0");
  if (!(tau.low > 0.0)) throw ValidationError("SamplerRanges: tau low must be > 0");
  if (n_samples < 1) throw ValidationError("SamplerRanges: n_samples must be >= 1");
}

namespace {

void surface_price(const MertonParams& params, OptionKind kind, double strike, double tau, double rate,
                   double s_lo, double s_hi, const GridOptions& grid, std::span<const double> spots,
                   std::span<double> out) {
  const auto g = make_grid(params, strike, tau, s_lo, s_hi, grid);
  const auto surf = solve(params, kind, ExerciseStyle::American, strike, rate, g);
  // linear-in-x interpolation can dip just under the convex payoff between nodes
  for (std::size_t i = 0; i < spots.size(); ++i)
    out[i] = std::max(interpolate(surf, spots[i], 0.0), payoff(kind, strike, spots[i]));
}

OptionSpec draw_spec(Rng& rng, const SamplerRanges& r) {
  OptionSpec s;
  s.spot = rng.uniform(r.spot.low, r.spot.high);
  s.strike = s.spot * rng.uniform(r.strike_ratio.low, r.strike_ratio.high);
  s.tau = rng.uniform(r.tau.low, r.tau.high);
  s.rate = rng.uniform(r.rate.low, r.rate.high);
  s.kind = r.kind;
  s.style = ExerciseStyle::American;
  return s;
}

}  // namespace

double label_price(const MertonParams& params, const OptionSpec& spec, const GridOptions& grid) {
  spec.validate();
  if (!(spec.tau > 0.0)) throw ValidationError("label_price: tau must be > 0");
  double out = 0.0;
  const double s = spec.spot;
  surface_price(params, spec.kind, spec.strike, spec.tau, spec.rate, s, s, grid, std::span(&s, 1),
                std::span(&out, 1));
  return out;
}

QuoteDataset generate_synthetic(const MertonParams& params, const SamplerRanges& ranges, const SynthOptions& opts) {
  params.validate();
  ranges.validate();
  const auto n = static_cast<std::size_t>(ranges.n_samples);

  std::vector<Rng> rngs;
  rngs.reserve(n);
  std::vector<OptionSpec> specs(n);
  for (std::size_t i = 0; i < n; ++i) {
    rngs.emplace_back(derive_seed(ranges.seed, i));
    specs[i] = draw_spec(rngs[i], ranges);
  }
  std::vector<double> prices(n, 0.0);
  std::vector<std::size_t> pending(n);
  std::iota(pending.begin(), pending.end(), std::size_t{0});

  for (int attempt = 0; !pending.empty(); ++attempt) {
    if (attempt > opts.max_retries) {
      throw std::runtime_error("generate_synthetic: " + std::to_string(pending.size()) +
                               " samples could not be labelled after " + std::to_string(opts.max_retries) +
                               " retries");
    }
    // group by exact (K, T, r); map keeps the grouping order deterministic
    std::map<std::tuple<double, double, double>, std::vector<std::size_t>> by_triple;
    for (std::size_t i : pending) by_triple[{specs[i].strike, specs[i].tau, specs[i].rate}].push_back(i);
    std::vector<std::vector<std::size_t>> groups;
    groups.reserve(by_triple.size());
    for (auto& [key, members] : by_triple) groups.push_back(std::move(members));

    std::vector<char> failed(groups.size(), 0);
    parallel_for(
        groups.size(),
        [&](std::size_t gi) {
          const auto& members = groups[gi];
          const auto& first = specs[members.front()];
          std::vector<double> spots(members.size()), out(members.size());
          for (std::size_t k = 0; k < members.size(); ++k) spots[k] = specs[members[k]].spot;
          const auto [lo, hi] = std::minmax_element(spots.begin(), spots.end());
          try {
            surface_price(params, ranges.kind, first.strike, first.tau, first.rate, *lo, *hi, opts.grid, spots, out);
          } catch (const std::exception&) {
            failed[gi] = 1;
            return;
          }
          for (std::size_t k = 0; k < members.size(); ++k) {
            if (!std::isfinite(out[k]) || out[k] < 0.0) {
              failed[gi] = 1;
              return;
            }
          }
          for (std::size_t k = 0; k < members.size(); ++k) prices[members[k]] = out[k];
        },
        opts.threads);

    std::vector<std::size_t> retry;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      if (!failed[gi]) continue;
      for (std::size_t i : groups[gi]) {
        specs[i] = draw_spec(rngs[i], ranges);
        retry.push_back(i);
      }
    }
    std::sort(retry.begin(), retry.end());
    pending = std::move(retry);
  }

  QuoteDataset data;
  data.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) data.rows[i] = {specs[i], prices[i], Split::Train};
  assign_splits(data, opts.train_frac, opts.val_frac, ranges.seed);
  return data;
}

namespace {

struct Columns {
  std::optional<std::size_t> spot, strike, tau, rate, kind, price, bid, ask, split, style;
};

Columns map_header(const std::vector<std::string>& header) {
  Columns c;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& h = header[i];
    if (h == "underlying") c.spot = i;
    else if (h == "strike") c.strike = i;
    else if (h == "tau") c.tau = i;
    else if (h == "rate") c.rate = i;
    else if (h == "kind") c.kind = i;
    else if (h == "price") c.price = i;
    else if (h == "bid") c.bid = i;
    else if (h == "ask") c.ask = i;
    else if (h == "split") c.split = i;
    else if (h == "style") c.style = i;
  }
  std::string missing;
  const auto need = [&](const std::optional<std::size_t>& col, const char* name) {
    if (!col) missing += std::string(missing.empty() ? "" : ", ") + name;
  };
  need(c.spot, "underlying");
  need(c.strike, "strike");
  need(c.tau, "tau");
  need(c.rate, "rate");
  need(c.kind, "kind");
  if (!c.price && !(c.bid && c.ask)) need(c.price, "price (or bid and ask)");
  if (!missing.empty()) throw ValidationError("load_market_csv: missing columns: " + missing);
  return c;
}

}  // namespace

LoadResult load_market_csv(const std::filesystem::path& path, std::uint64_t split_seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_market_csv: cannot read " + path.string());
  LoadResult res;
  std::string line;
  std::size_t line_no = 0;
  std::optional<Columns> cols;
  std::size_t n_fields = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (!cols) {
      if (line_no == 1 && fields.front().size() >= 3 &&
          static_cast<unsigned char>(fields.front()[0]) == 0xEF) {
        fields.front().erase(0, 3);  // UTF-8 byte order mark
      }
      cols = map_header(fields);
      n_fields = fields.size();
      continue;
    }
    try {
      if (fields.size() != n_fields) {
        throw ValidationError("expected " + std::to_string(n_fields) + " fields, got " +
                              std::to_string(fields.size()));
      }
      QuoteRow row;
      row.spec.spot = parse_double(fields[*cols->spot]);
      row.spec.strike = parse_double(fields[*cols->strike]);
      row.spec.tau = parse_double(fields[*cols->tau]);
      row.spec.rate = parse_double(fields[*cols->rate]);
      row.spec.kind = parse_kind(fields[*cols->kind]);
      row.spec.style = cols->style ? parse_style(fields[*cols->style]) : ExerciseStyle::American;
      if (cols->price) {
        row.price = parse_double(fields[*cols->price]);
      } else {
        const double bid = parse_double(fields[*cols->bid]);
        const double ask = parse_double(fields[*cols->ask]);
        if (bid < 0.0 || ask < 0.0) throw ValidationError("negative bid or ask");
        if (ask < bid) throw ValidationError("ask below bid");
        row.price = 0.5 * (bid + ask);
      }
      if (cols->split) row.split = parse_split(fields[*cols->split]);
      row.spec.validate();
      if (!std::isfinite(row.price) || row.price < 0.0) throw ValidationError("price must be finite and >= 0");
      res.data.rows.push_back(row);
    } catch (const std::invalid_argument& e) {
      res.rejected.push_back({line_no, e.what()});
    }
  }
  if (!cols) {
    res.warnings.push_back("empty file: " + path.string());
    return res;
  }
  if (!res.rejected.empty()) {
    res.warnings.push_back(std::to_string(res.rejected.size()) + " malformed rows rejected");
  }
  res.had_split_column = cols->split.has_value();
  if (!res.had_split_column) assign_splits(res.data, 0.70, 0.15, split_seed);
  return res;
}

std::vector<std::size_t> subsample_indices(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0) || ratio > 1.0) throw ValidationError("subsample: ratio must be in (0, 1]");
  const auto k = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))));
  if (k == n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  // partial Fisher-Yates over a sparse permutation
  Rng rng(seed);
  std::unordered_map<std::size_t, std::size_t> swapped;
  const auto at = [&](std::size_t i) {
    const auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    const std::size_t vi = at(i), vj = at(j);
    out[i] = vj;
    swapped[j] = vi;
  }
  std::sort(out.begin(), out.end());
  return out;
}

QuoteDataset subsample(const QuoteDataset& data, double ratio, std::uint64_t seed) {
  const auto idx = subsample_indices(data.size(), ratio, seed);
  QuoteDataset out;
  out.rows.reserve(idx.size());
  for (std::size_t i : idx) out.rows.push_back(data.rows[i]);
  return out;
}

}  // namespace jdpinn
