#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "jdpinn/analytical.hpp"
#include "jdpinn/calibration.hpp"
#include "jdpinn/datagen.hpp"
#include "jdpinn/montecarlo.hpp"
#include "jdpinn/neuralnet.hpp"
#include "jdpinn/pide.hpp"
#include "jdpinn/training.hpp"

namespace jdpinn::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest init failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

namespace {

/// JSON config files. Top-level scalars apply to the subcommand being run;
/// an object keyed by a subcommand name applies to that subcommand.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    ordered_json j;
    try {
      j = ordered_json::parse(in);
    } catch (const ordered_json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::string active;
    for (const auto* sub : app_->get_subcommands()) active = sub->get_name();
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        if (!app_->get_subcommand_no_throw(key)) throw CLI::ConversionError("config: unknown section '" + key + "'");
        for (const auto& [k2, v2] : value.items()) items.push_back(item({key}, k2, v2));
      } else if (!active.empty()) {
        items.push_back(item({active}, key, value));
      }
    }
    return items;
  }

 private:
  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const ordered_json& v) {
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = name;
    const auto scalar = [](const ordered_json& s) {
      if (s.is_string()) return s.get<std::string>();
      if (s.is_boolean()) return std::string(s.get<bool>() ? "true" : "false");
      return s.dump();
    };
    if (v.is_array()) {
      for (const auto& e : v) it.inputs.push_back(scalar(e));
    } else {
      it.inputs.push_back(scalar(v));
    }
    return it;
  }

  const CLI::App* app_;
};

struct Run {
  std::ostream& out;
  std::ostream& err;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  ordered_json extra = ordered_json::object();
};

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

MertonParams params_or_default(const std::string& path, Run& run) {
  if (path.empty()) throw ValidationError("--params is required");
  run.inputs.emplace_back(path);
  return read_params_file(path);
}

std::vector<double> read_prices_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<double> prices;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_csv_line(line);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 1) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected one column");
    }
    try {
      prices.push_back(parse_double(fields[0]));
    } catch (const ValidationError&) {
      if (line_no == 1) continue;  // header
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
  }
  return prices;
}

OptionKind dataset_kind(const QuoteDataset& data) {
  if (data.empty()) throw ValidationError("dataset is empty");
  const auto k = data.rows.front().spec.kind;
  for (const auto& r : data.rows) {
    if (r.spec.kind != k) throw ValidationError("dataset mixes calls and puts; train one kind at a time");
  }
  return k;
}

QuoteDataset load_dataset(const std::string& path, Run& run, std::uint64_t seed) {
  if (path.empty()) throw ValidationError("--data is required");
  run.inputs.emplace_back(path);
  auto res = load_market_csv(path, seed);
  for (const auto& w : res.warnings) run.err << "warning: " << w << '\n';
  for (const auto& r : res.rejected) run.err << path << ":" << r.line << ": rejected: " << r.reason << '\n';
  return std::move(res.data);
}

/// Reference European prices cached beside the dataset, keyed by the dataset
/// checksum and the calibrated parameters.
std::vector<double> cached_reference(const MertonParams& params, const QuoteDataset& data, const fs::path& data_path,
                                     Run& run) {
  const fs::path cache = data_path.string() + ".vref.json";
  const std::string sha = sha256_file(data_path);
  const auto pj = ordered_json::parse(params_to_json(params));
  if (fs::exists(cache)) {
    try {
      std::ifstream in(cache);
      const auto j = ordered_json::parse(in);
      if (j.at("dataset_sha256") == sha && j.at("params") == pj) {
        auto v = j.at("values").get<std::vector<double>>();
        if (v.size() == data.size()) return v;
      }
    } catch (const std::exception&) {
      run.err << "warning: ignoring unreadable cache " << cache << '\n';
    }
  }
  auto v = reference_prices(params, data);
  ordered_json j;
  j["dataset_sha256"] = sha;
  j["params"] = pj;
  j["values"] = v;
  std::ofstream out(cache);
  if (out) {
    out << j.dump() << '\n';
    run.outputs.push_back(cache);
  }
  return v;
}

template <typename Fn>
void write_file(const fs::path& path, Run& run, Fn&& writer) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  writer(out);
  out.close();
  run.outputs.push_back(path);
}

ordered_json metrics_json(const Metrics& m) {
  return {{"mae", m.mae}, {"mse", m.mse}, {"rmse", m.rmse}, {"r2", m.r2}, {"explained_variance", m.explained_variance},
          {"max_error", m.max_error}};
}

std::string fmt6(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

// ---- option sets -----------------------------------------------------------

struct GridFlags {
  int nx = 600;
  int nt = 300;
  void add(CLI::App* a) {
    a->add_option("--nx", nx, "Spatial steps of the PIDE grid")->capture_default_str()->check(CLI::Range(8, 1 << 20));
    a->add_option("--nt", nt, "Time steps of the PIDE grid")->capture_default_str()->check(CLI::Range(4, 1 << 20));
  }
  GridOptions options() const {
    GridOptions g;
    g.n_x = nx;
    g.n_t = nt;
    return g;
  }
};

struct TrainFlags {
  TrainConfig cfg;
  void add(CLI::App* a) {
    a->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    a->add_option("--batch-size", cfg.batch_size, "Mini-batch size")->capture_default_str();
    a->add_option("--max-lr", cfg.max_lr, "OneCycle peak learning rate")->capture_default_str();
    a->add_option("--pct-start", cfg.pct_start, "OneCycle warm-up fraction")->capture_default_str();
    a->add_option("--div-factor", cfg.div_factor, "OneCycle initial divisor")->capture_default_str();
    a->add_option("--final-div-factor", cfg.final_div_factor, "OneCycle final divisor")->capture_default_str();
    a->add_option("--cycles", cfg.cycles, "OneCycle restarts per run")->capture_default_str();
    a->add_option("--patience", cfg.patience, "Early-stopping patience in epochs")->capture_default_str();
    a->add_option("--min-delta", cfg.min_delta, "Minimum validation improvement")->capture_default_str();
    a->add_option("--alpha", cfg.alpha, "Physics loss weight")->capture_default_str();
    a->add_option("--beta", cfg.beta, "Data loss weight")->capture_default_str();
  }
};

struct Options {
  std::uint64_t seed = 42;
  std::string params, data, out, model;
  // calibrate
  std::string prices;
  double dt = 1.0 / 252.0;
  int max_iters = 1000;
  int truncation_k = 10;
  double tolerance = 1e-8;
  bool no_local_search = false;
  // price / solve
  double spot = 100.0, strike = 100.0, tau = 1.0, rate = 0.0;
  std::string kind = "C", style = "european", method = "analytic", variant = "canonical";
  int paths = 100000;
  int terms = kDefaultSeriesTerms;
  double s_min = 0.0, s_max = 0.0;
  GridFlags grid;
  // simulate
  double s0 = 100.0, horizon = 14.0;
  int steps = 14 * 252;
  std::string measure = "real";
  int bins = 100;
  std::string hist_out;
  // gen-data
  int n = 20000;
  double spot_lo = 200, spot_hi = 500, ratio_lo = 0.5, ratio_hi = 1.5, tau_lo = 0.02, tau_hi = 2.0, rate_lo = 0.0,
         rate_hi = 0.05;
  std::string raw_schema;
  double subsample_ratio = 1.0;
  // train / tune / evaluate
  TrainFlags train;
  std::string scheme = "merton";
  std::string pretrain_data;
  int pretrain_epochs = 0;
  std::string history_out, pretrain_history_out;
  std::string split = "test", filter = "all";
  int trials = 10, epochs_per_trial = 20, n_startup = 10;
  double alpha_lo = 0.01, alpha_hi = 1.0, beta_lo = 0.01, beta_hi = 1.0;
  bool full = false;
  // repro
  std::string out_dir;
  int n_real = 3600;
  int n_returns = 10000;
  int tune_trials = 10, tune_epochs = 5;
};

// ---- commands --------------------------------------------------------------

void cmd_calibrate(const Options& o, Run& run) {
  if (o.prices.empty()) throw ValidationError("--prices is required");
  if (o.out.empty()) throw ValidationError("--out is required");
  run.inputs.emplace_back(o.prices);
  const auto prices = read_prices_csv(o.prices);
  const auto series = log_returns(prices, o.dt);
  AnnealConfig cfg;
  cfg.max_iters = o.max_iters;
  cfg.seed = o.seed;
  cfg.truncation_k = o.truncation_k;
  cfg.tolerance = o.tolerance;
  cfg.local_search = !o.no_local_search;
  const auto res = calibrate(series, ParamBounds{}, cfg);
  ensure_parent(o.out);
  write_params_file(o.out, res.params);
  run.outputs.emplace_back(o.out);
  run.extra["objective"] = res.objective;
  run.extra["evaluations"] = res.evaluations;
  run.out << params_to_json(res.params) << '\n';
}

OptionSpec spec_from(const Options& o) {
  OptionSpec s{o.spot, o.strike, o.tau, o.rate, parse_kind(o.kind), parse_style(o.style)};
  s.validate();
  return s;
}

void cmd_price(const Options& o, Run& run) {
  const auto p = params_or_default(o.params, run);
  const auto spec = spec_from(o);
  double price = 0.0;
  if (o.method == "analytic") {
    if (spec.style != ExerciseStyle::European) throw ValidationError("analytic pricing supports European style only");
    if (o.variant == "canonical") {
      price = price_european_canonical(p, spec, o.terms);
    } else if (o.variant == "paper") {
      price = price_european_paper(p, spec, o.terms);
    } else {
      throw ValidationError("--variant must be canonical or paper");
    }
  } else if (o.method == "mc") {
    if (spec.style != ExerciseStyle::European) throw ValidationError("Monte Carlo pricing supports European style only");
    const auto est = mc_price_european(p, spec, o.paths, o.seed);
    price = est.price;
    run.extra["std_error"] = est.std_error;
    run.err << "std_error " << fmt6(est.std_error) << '\n';
  } else if (o.method == "pide") {
    if (!(spec.tau > 0.0)) {
      price = payoff(spec, spec.spot);
    } else {
      const auto g = make_grid(p, spec.strike, spec.tau, spec.spot, spec.spot, o.grid.options());
      const auto surf = solve(p, spec.kind, spec.style, spec.strike, spec.rate, g);
      for (const auto& w : surf.warnings) run.err << "warning: " << w << '\n';
      price = interpolate(surf, spec.spot, 0.0);
    }
  } else {
    throw ValidationError("--method must be analytic, pide or mc");
  }
  run.extra["price"] = price;
  run.out << fmt6(price) << '\n';
}

void cmd_solve(const Options& o, Run& run) {
  const auto p = params_or_default(o.params, run);
  if (o.out.empty()) throw ValidationError("--out is required");
  const auto kind = parse_kind(o.kind);
  const auto style = parse_style(o.style);
  if (!(o.tau > 0.0)) throw ValidationError("--tau must be > 0");
  const double lo = o.s_min > 0.0 ? o.s_min : o.strike;
  const double hi = o.s_max > 0.0 ? o.s_max : o.strike;
  const auto g = make_grid(p, o.strike, o.tau, lo, hi, o.grid.options());
  const auto surf = solve(p, kind, style, o.strike, o.rate, g);
  for (const auto& w : surf.warnings) run.err << "warning: " << w << '\n';
  write_file(o.out, run, [&](std::ostream& f) {
    f << "t,x,S,value\n" << std::setprecision(12);
    for (int j = 0; j <= g.n_t; ++j) {
      for (int i = 0; i <= g.n_x; ++i) {
        f << g.t(j) << ',' << g.x(i) << ',' << std::exp(g.x(i)) << ',' << surf.values(j, i) << '\n';
      }
    }
  });
}

void cmd_simulate(const Options& o, Run& run) {
  const auto p = params_or_default(o.params, run);
  if (o.out.empty()) throw ValidationError("--out is required");
  PathConfig cfg;
  cfg.s0 = o.s0;
  cfg.horizon = o.horizon;
  cfg.steps = o.steps;
  cfg.n_paths = o.paths;
  cfg.seed = o.seed;
  cfg.rate = o.rate;
  if (o.measure == "real") {
    cfg.measure = Measure::RealWorld;
  } else if (o.measure == "risk-neutral") {
    cfg.measure = Measure::RiskNeutral;
  } else {
    throw ValidationError("--measure must be real or risk-neutral");
  }
  const auto paths = simulate_paths(p, cfg);
  write_file(o.out, run, [&](std::ostream& f) {
    f << std::setprecision(12);
    for (Eigen::Index i = 0; i < paths.rows(); ++i) {
      for (Eigen::Index j = 0; j < paths.cols(); ++j) f << (j ? "," : "") << paths(i, j);
      f << '\n';
    }
  });
  if (!o.hist_out.empty()) {
    const auto h = log_return_histogram(paths, o.bins);
    write_file(o.hist_out, run, [&](std::ostream& f) {
      f << "edge_low,edge_high,density\n" << std::setprecision(12);
      for (std::size_t b = 0; b < h.density.size(); ++b) {
        f << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.density[b] << '\n';
      }
    });
    if (paths.cols() * paths.rows() >= 5) run.extra["excess_kurtosis"] = excess_kurtosis(paths);
  }
}

SamplerRanges ranges_from(const Options& o) {
  SamplerRanges r;
  r.spot = {o.spot_lo, o.spot_hi};
  r.strike_ratio = {o.ratio_lo, o.ratio_hi};
  r.tau = {o.tau_lo, o.tau_hi};
  r.rate = {o.rate_lo, o.rate_hi};
  r.n_samples = o.n;
  r.kind = parse_kind(o.kind);
  r.seed = o.seed;
  return r;
}

void cmd_gen_data(const Options& o, Run& run) {
  if (o.out.empty()) throw ValidationError("--out is required");
  QuoteDataset data;
  if (!o.raw_schema.empty()) {
    data = load_dataset(o.raw_schema, run, o.seed);
  } else {
    const auto p = params_or_default(o.params, run);
    SynthOptions so;
    so.grid = o.grid.options();
    data = generate_synthetic(p, ranges_from(o), so);
  }
  if (o.subsample_ratio < 1.0) data = subsample(data, o.subsample_ratio, o.seed);
  ensure_parent(o.out);
  write_dataset_csv(fs::path(o.out), data);
  run.outputs.emplace_back(o.out);
  run.extra["rows"] = data.size();
  run.out << "wrote " << data.size() << " rows (" << data.count(Split::Train) << " train, "
          << data.count(Split::Val) << " val, " << data.count(Split::Test) << " test) to " << o.out << '\n';
}

void write_train_outputs(const Options& o, Run& run, const TrainResult& r, const std::string& history_path) {
  if (!history_path.empty()) {
    write_file(history_path, run, [&](std::ostream& f) { write_history_csv(f, r.history); });
  }
  run.out << r.message << "; best epoch " << r.best_epoch << ", best val loss " << r.best_val_loss << '\n';
  (void)o;
}

void cmd_train(const Options& o, Run& run) {
  const auto p = params_or_default(o.params, run);
  const auto data = load_dataset(o.data, run, o.seed);
  if (o.model.empty()) throw ValidationError("--model-out is required");
  const auto kind = dataset_kind(data);
  const auto ref = cached_reference(p, data, o.data, run);
  TrainConfig cfg = o.train.cfg;
  cfg.seed = o.seed;
  PhysicsMode mode = PhysicsMode::Merton;
  if (o.scheme == "bs") {
    mode = PhysicsMode::BS;
  } else if (o.scheme == "nn") {
    cfg.alpha = 0.0;
  } else if (o.scheme != "merton" && o.scheme != "transfer") {
    throw ValidationError("--scheme must be merton, transfer, bs or nn");
  }

  TrainResult final;
  if (o.scheme == "transfer") {
    const auto synth = load_dataset(o.pretrain_data, run, o.seed);
    if (dataset_kind(synth) != kind) throw ValidationError("pretraining data must hold the same option kind");
    const auto synth_ref = cached_reference(p, synth, o.pretrain_data, run);
    TrainConfig stage1 = cfg;
    if (o.pretrain_epochs > 0) stage1.epochs = o.pretrain_epochs;
    const auto model = make_model(kind, mode, p, synth, o.seed);
    auto tr = pretrain_transfer(model, synth, synth_ref, data, ref, stage1, cfg);
    write_train_outputs(o, run, tr.stage1, o.pretrain_history_out);
    run.extra["stage2_initial_val_loss"] = tr.stage2.initial_val_loss;
    final = std::move(tr.stage2);
  } else {
    final = train(make_model(kind, mode, p, data, o.seed), data, ref, cfg);
  }
  write_train_outputs(o, run, final, o.history_out);
  ensure_parent(o.model);
  save_model(o.model, final.model);
  run.outputs.emplace_back(o.model);
  run.extra["best_val_loss"] = final.best_val_loss;
  run.extra["initial_val_loss"] = final.initial_val_loss;
  run.extra["diverged"] = final.diverged;
}

void cmd_tune(const Options& o, Run& run) {
  const auto p = params_or_default(o.params, run);
  const auto data = load_dataset(o.data, run, o.seed);
  const auto kind = dataset_kind(data);
  const auto ref = cached_reference(p, data, o.data, run);
  TuneConfig tc;
  tc.n_trials = o.full ? 50 : o.trials;
  tc.epochs_per_trial = o.full ? 100 : o.epochs_per_trial;
  tc.n_startup = std::min(o.n_startup, tc.n_trials);
  tc.alpha = {o.alpha_lo, o.alpha_hi};
  tc.beta = {o.beta_lo, o.beta_hi};
  tc.seed = o.seed;
  TrainConfig base = o.train.cfg;
  base.seed = o.seed;
  const auto res = tune_coefficients(
      data, ref, [&] { return make_model(kind, PhysicsMode::Merton, p, data, o.seed); }, base, tc);
  if (!o.out.empty()) write_file(o.out, run, [&](std::ostream& f) { write_tuning_csv(f, res.log); });
  run.extra["alpha"] = res.alpha;
  run.extra["beta"] = res.beta;
  run.extra["best_val_loss"] = res.best_val_loss;
  run.out << "alpha " << res.alpha << " beta " << res.beta << " val_loss " << res.best_val_loss << '\n';
}

void cmd_evaluate(const Options& o, Run& run) {
  if (o.model.empty()) throw ValidationError("--model is required");
  run.inputs.emplace_back(o.model);
  auto model = load_model(o.model);
  const auto data = load_dataset(o.data, run, o.seed);
  if (data.empty()) throw ValidationError("evaluate: dataset " + o.data + " has no rows");
  EvalFilter filter = EvalFilter::All;
  if (o.filter == "deep-otm") {
    filter = EvalFilter::DeepOtm;
  } else if (o.filter != "all") {
    throw ValidationError("--filter must be all or deep-otm");
  }
  const auto m = evaluate(model, data, parse_split(o.split), filter);
  const auto j = metrics_json(m);
  run.extra["metrics"] = j;
  if (!o.out.empty()) write_file(o.out, run, [&](std::ostream& f) { f << j.dump(2) << '\n'; });
  run.out << j.dump(2) << '\n';
}

void cmd_repro(const Options& o, Run& run) {
  if (o.out_dir.empty()) throw ValidationError("--out-dir is required");
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  const auto log = [&](const std::string& s) { run.err << "[repro] " << s << '\n'; };

  MertonParams truth{0.179, 0.143, 2.0, -0.012, 0.042};
  PathConfig pc;
  pc.s0 = 100.0;
  pc.horizon = o.n_returns / 252.0;
  pc.steps = o.n_returns;
  pc.n_paths = 1;
  pc.seed = o.seed;
  const auto path = simulate_paths(truth, pc);
  write_file(dir / "prices.csv", run, [&](std::ostream& f) {
    f << "close\n" << std::setprecision(17);
    for (Eigen::Index j = 0; j < path.cols(); ++j) f << path(0, j) << '\n';
  });

  log("calibrating");
  std::vector<double> closes(path.data(), path.data() + path.cols());
  AnnealConfig ac;
  ac.seed = o.seed;
  ac.max_iters = o.max_iters;
  const auto cal = calibrate(log_returns(closes, 1.0 / 252.0), ParamBounds{}, ac);
  write_params_file(dir / "params.json", cal.params);
  run.outputs.push_back(dir / "params.json");

  log("generating synthetic data");
  SynthOptions so;
  so.grid = o.grid.options();
  SamplerRanges sr = ranges_from(o);
  const auto synth = generate_synthetic(cal.params, sr, so);
  write_dataset_csv(dir / "synthetic.csv", synth);
  run.outputs.push_back(dir / "synthetic.csv");

  // market analogue: a different parameter set than the one the physics sees
  MertonParams shifted = cal.params;
  shifted.sigma *= 1.15;
  shifted.lambda = std::min(5.0, shifted.lambda * 0.75 + 0.25);
  shifted.mu_y -= 0.01;
  sr.n_samples = o.n_real;
  sr.seed = o.seed + 1;
  const auto real = generate_synthetic(shifted, sr, so);
  write_dataset_csv(dir / "real.csv", real);
  run.outputs.push_back(dir / "real.csv");

  const auto synth_ref = reference_prices(cal.params, synth);
  const auto real_ref = reference_prices(cal.params, real);
  const auto kind = parse_kind(o.kind);

  log("tuning loss coefficients");
  TuneConfig tc;
  tc.n_trials = o.tune_trials;
  tc.epochs_per_trial = o.tune_epochs;
  tc.n_startup = std::min(o.n_startup, o.tune_trials);
  tc.seed = o.seed;
  TrainConfig base = o.train.cfg;
  base.seed = o.seed;
  const auto tuned = tune_coefficients(
      real, real_ref, [&] { return make_model(kind, PhysicsMode::Merton, cal.params, real, o.seed); }, base, tc);
  write_file(dir / "tuning.csv", run, [&](std::ostream& f) { write_tuning_csv(f, tuned.log); });

  TrainConfig cfg = base;
  cfg.alpha = tuned.alpha;
  cfg.beta = tuned.beta;
  log("training PINN-Merton");
  auto merton = train(make_model(kind, PhysicsMode::Merton, cal.params, real, o.seed), real, real_ref, cfg);
  write_file(dir / "history_merton.csv", run, [&](std::ostream& f) { write_history_csv(f, merton.history); });
  save_model(dir / "model_merton.json", merton.model);
  run.outputs.push_back(dir / "model_merton.json");

  log("training PINN-Merton-Transfer");
  auto transfer = pretrain_transfer(make_model(kind, PhysicsMode::Merton, cal.params, synth, o.seed), synth,
                                    synth_ref, real, real_ref, cfg, cfg);
  write_file(dir / "history_transfer_stage1.csv", run,
             [&](std::ostream& f) { write_history_csv(f, transfer.stage1.history); });
  write_file(dir / "history_transfer_stage2.csv", run,
             [&](std::ostream& f) { write_history_csv(f, transfer.stage2.history); });
  save_model(dir / "model_transfer.json", transfer.stage2.model);
  run.outputs.push_back(dir / "model_transfer.json");

  ordered_json summary;
  summary["calibrated"] = ordered_json::parse(params_to_json(cal.params));
  summary["alpha"] = tuned.alpha;
  summary["beta"] = tuned.beta;
  for (auto* entry : {&merton, &transfer.stage2}) {
    const std::string name = entry == &merton ? "pinn_merton" : "pinn_merton_transfer";
    summary[name]["test"] = metrics_json(evaluate(entry->model, real, Split::Test));
    try {
      summary[name]["test_deep_otm"] = metrics_json(evaluate(entry->model, real, Split::Test, EvalFilter::DeepOtm));
    } catch (const ValidationError&) {
      summary[name]["test_deep_otm"] = nullptr;
    }
    summary[name]["initial_val_loss"] = entry->initial_val_loss;
    summary[name]["first_epoch_val_loss"] = entry->history.empty() ? 0.0 : entry->history.front().val_loss;
  }
  write_file(dir / "summary.json", run, [&](std::ostream& f) { f << summary.dump(2) << '\n'; });
  run.out << summary.dump(2) << '\n';
}

ordered_json resolved_config(const CLI::App* sub) {
  ordered_json cfg = ordered_json::object();
  for (const auto* opt : sub->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help") continue;
    const auto& name = names.front();
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_type_size() == 0) {
        cfg[name] = true;
      } else if (res.size() == 1) {
        cfg[name] = res.front();
      } else {
        cfg[name] = res;
      }
    } else if (!opt->get_default_str().empty()) {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_manifest(const fs::path& path, const std::string& command, const CLI::App* sub, const Options& o,
                    const std::string& config_file, const Run& run, double seconds, const std::string& started) {
  ordered_json m;
  m["command"] = command;
  m["config"] = resolved_config(sub);
  if (!config_file.empty()) m["config_file"] = config_file;
  m["seeds"] = {{"seed", o.seed}};
  const auto files = [](const std::vector<fs::path>& ps) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : ps) {
      ordered_json e{{"path", p.string()}};
      e["sha256"] = fs::exists(p) ? ordered_json(sha256_file(p)) : ordered_json(nullptr);
      arr.push_back(e);
    }
    return arr;
  };
  m["inputs"] = files(run.inputs);
  m["outputs"] = files(run.outputs);
  m["started_at"] = started;
  m["wall_clock_seconds"] = seconds;
  m["results"] = run.extra;
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << m.dump(2) << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Merton jump-diffusion pricing, calibration and physics-informed neural pricing"};
  app.name("jdpinn");
  app.require_subcommand(1);
  std::string config_file, manifest;
  app.set_config("--config", "", "JSON config file (flags override it)");
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.add_option("--manifest", manifest, "Run manifest path (default: beside the first output)");

  Options o;
  const auto seed_opt = [&](CLI::App* a) {
    a->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    a->fallthrough();
  };
  const auto spec_opts = [&](CLI::App* a) {
    a->add_option("--params", o.params, "MertonParams JSON file");
    a->add_option("--spot", o.spot, "Spot price")->capture_default_str();
    a->add_option("--strike", o.strike, "Strike")->capture_default_str();
    a->add_option("--tau", o.tau, "Years to maturity")->capture_default_str();
    a->add_option("--rate", o.rate, "Risk-free rate")->capture_default_str();
    a->add_option("--kind", o.kind, "C or P")->capture_default_str();
    a->add_option("--style", o.style, "european or american")->capture_default_str();
  };

  auto* cal = app.add_subcommand("calibrate", "Fit Merton parameters to a close-price series");
  seed_opt(cal);
  cal->add_option("--prices", o.prices, "One-column CSV of close prices");
  cal->add_option("--out", o.out, "Output MertonParams JSON");
  cal->add_option("--dt", o.dt, "Years between observations")->capture_default_str();
  cal->add_option("--max-iters", o.max_iters, "Annealing iterations")->capture_default_str();
  cal->add_option("--truncation-k", o.truncation_k, "Jump-count cutoff of the density")->capture_default_str();
  cal->add_option("--tolerance", o.tolerance, "Stop when a restart cycle improves less")->capture_default_str();
  cal->add_flag("--no-local-search", o.no_local_search, "Disable the local refinement");

  auto* price = app.add_subcommand("price", "Price one option");
  seed_opt(price);
  spec_opts(price);
  price->add_option("--method", o.method, "analytic, pide or mc")->capture_default_str();
  price->add_option("--variant", o.variant, "Analytic series: canonical or paper")->capture_default_str();
  price->add_option("--terms", o.terms, "Series terms")->capture_default_str();
  price->add_option("--paths", o.paths, "Monte Carlo paths")->capture_default_str();
  o.grid.add(price);

  auto* solve_cmd = app.add_subcommand("solve", "Solve the PIDE and write the value surface");
  seed_opt(solve_cmd);
  spec_opts(solve_cmd);
  solve_cmd->add_option("--s-min", o.s_min, "Lowest spot the core grid must cover");
  solve_cmd->add_option("--s-max", o.s_max, "Highest spot the core grid must cover");
  solve_cmd->add_option("--out", o.out, "Surface CSV (t,x,S,value)");
  o.grid.add(solve_cmd);

  auto* sim = app.add_subcommand("simulate", "Simulate price paths");
  seed_opt(sim);
  sim->add_option("--params", o.params, "MertonParams JSON file");
  sim->add_option("--s0", o.s0, "Initial price")->capture_default_str();
  sim->add_option("--horizon", o.horizon, "Years")->capture_default_str();
  sim->add_option("--steps", o.steps, "Time steps")->capture_default_str();
  sim->add_option("--paths", o.paths, "Number of paths")->capture_default_str();
  sim->add_option("--measure", o.measure, "real or risk-neutral")->capture_default_str();
  sim->add_option("--rate", o.rate, "Rate under the risk-neutral measure")->capture_default_str();
  sim->add_option("--bins", o.bins, "Histogram bins")->capture_default_str();
  sim->add_option("--out", o.out, "Paths CSV, one row per path");
  sim->add_option("--hist-out", o.hist_out, "Histogram CSV of pooled log returns");
  o.paths = 8;

  auto* gen = app.add_subcommand("gen-data", "Generate a PIDE-labelled synthetic dataset");
  seed_opt(gen);
  gen->add_option("--params", o.params, "MertonParams JSON file");
  gen->add_option("--n", o.n, "Number of samples")->capture_default_str();
  gen->add_option("--kind", o.kind, "C or P")->capture_default_str();
  gen->add_option("--spot-min", o.spot_lo, "Spot range low")->capture_default_str();
  gen->add_option("--spot-max", o.spot_hi, "Spot range high")->capture_default_str();
  gen->add_option("--strike-ratio-min", o.ratio_lo, "Strike / spot low")->capture_default_str();
  gen->add_option("--strike-ratio-max", o.ratio_hi, "Strike / spot high")->capture_default_str();
  gen->add_option("--tau-min", o.tau_lo, "Maturity low (years)")->capture_default_str();
  gen->add_option("--tau-max", o.tau_hi, "Maturity high (years)")->capture_default_str();
  gen->add_option("--rate-min", o.rate_lo, "Rate low")->capture_default_str();
  gen->add_option("--rate-max", o.rate_hi, "Rate high")->capture_default_str();
  gen->add_option("--raw-schema", o.raw_schema, "Convert a quote CSV (bid/ask or dataset schema) instead");
  gen->add_option("--subsample", o.subsample_ratio, "Keep this fraction of rows")->capture_default_str();
  gen->add_option("--out", o.out, "Output dataset CSV");
  o.grid.add(gen);

  const auto data_opts = [&](CLI::App* a) {
    a->add_option("--params", o.params, "Calibrated MertonParams JSON (physics reference)");
    a->add_option("--data", o.data, "Dataset CSV");
  };

  auto* tune = app.add_subcommand("tune", "Search loss coefficients with a Parzen-estimator optimizer");
  seed_opt(tune);
  data_opts(tune);
  o.train.add(tune);
  tune->add_option("--trials", o.trials, "Number of trials")->capture_default_str();
  tune->add_option("--epochs-per-trial", o.epochs_per_trial, "Training epochs per trial")->capture_default_str();
  tune->add_option("--n-startup", o.n_startup, "Random trials before the surrogate")->capture_default_str();
  tune->add_option("--alpha-min", o.alpha_lo, "alpha lower bound")->capture_default_str();
  tune->add_option("--alpha-max", o.alpha_hi, "alpha upper bound")->capture_default_str();
  tune->add_option("--beta-min", o.beta_lo, "beta lower bound")->capture_default_str();
  tune->add_option("--beta-max", o.beta_hi, "beta upper bound")->capture_default_str();
  tune->add_flag("--full", o.full, "Full budget: 50 trials of 100 epochs");
  tune->add_option("--out", o.out, "Trial log CSV");

  auto* tr = app.add_subcommand("train", "Train a hybrid pricing model");
  seed_opt(tr);
  data_opts(tr);
  o.train.add(tr);
  tr->add_option("--scheme", o.scheme, "merton, transfer, bs or nn")->capture_default_str();
  tr->add_option("--pretrain-data", o.pretrain_data, "Synthetic dataset for the transfer scheme");
  tr->add_option("--pretrain-epochs", o.pretrain_epochs, "Stage-1 epochs (default: --epochs)");
  tr->add_option("--model-out", o.model, "Output model JSON");
  tr->add_option("--history-out", o.history_out, "Training history CSV");
  tr->add_option("--pretrain-history-out", o.pretrain_history_out, "Stage-1 history CSV (transfer)");

  auto* ev = app.add_subcommand("evaluate", "Metrics of a trained model on one split");
  seed_opt(ev);
  ev->add_option("--model", o.model, "Model JSON");
  ev->add_option("--data", o.data, "Dataset CSV");
  ev->add_option("--split", o.split, "train, val or test")->capture_default_str();
  ev->add_option("--filter", o.filter, "all or deep-otm (price < 10)")->capture_default_str();
  ev->add_option("--out", o.out, "Metrics JSON");

  auto* repro = app.add_subcommand("repro", "Run the desk-scale pipeline end to end");
  seed_opt(repro);
  o.train.add(repro);
  o.grid.add(repro);
  repro->add_option("--out-dir", o.out_dir, "Directory for every artifact");
  repro->add_option("--n", o.n, "Synthetic rows")->capture_default_str();
  repro->add_option("--n-real", o.n_real, "Market-analogue rows")->capture_default_str();
  repro->add_option("--n-returns", o.n_returns, "Daily returns used for calibration")->capture_default_str();
  repro->add_option("--max-iters", o.max_iters, "Annealing iterations")->capture_default_str();
  repro->add_option("--tune-trials", o.tune_trials, "Tuning trials")->capture_default_str();
  repro->add_option("--tune-epochs", o.tune_epochs, "Epochs per tuning trial")->capture_default_str();
  repro->add_option("--n-startup", o.n_startup, "Random tuning trials")->capture_default_str();
  repro->add_option("--kind", o.kind, "C or P")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 1;
  }
  if (auto* c = app.get_option("--config"); c->count() > 0) config_file = c->as<std::string>();

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  Run run{out, err, {}, {}};
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (command == "calibrate") cmd_calibrate(o, run);
    else if (command == "price") cmd_price(o, run);
    else if (command == "solve") cmd_solve(o, run);
    else if (command == "simulate") cmd_simulate(o, run);
    else if (command == "gen-data") cmd_gen_data(o, run);
    else if (command == "tune") cmd_tune(o, run);
    else if (command == "train") cmd_train(o, run);
    else if (command == "evaluate") cmd_evaluate(o, run);
    else if (command == "repro") cmd_repro(o, run);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fs::path mpath = manifest;
    if (mpath.empty()) {
      mpath = run.outputs.empty() ? fs::path(command + ".manifest.json")
                                  : fs::path(run.outputs.front().string() + ".manifest.json");
    }
    write_manifest(mpath, command, sub, o, config_file, run, secs, started);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace jdpinn::cli
