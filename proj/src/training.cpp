#include "jdpinn/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "jdpinn/analytical.hpp"
#include "jdpinn/rng.hpp"

namespace jdpinn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
  if (!(max_lr > 0.0)) throw ValidationError("TrainConfig: max_lr must be > 0");
  if (!(pct_start >= 0.0 && pct_start < 1.0)) throw ValidationError("TrainConfig: pct_start must be in [0, 1)");
  if (!(div_factor > 0.0) || !(final_div_factor > 0.0)) throw ValidationError("TrainConfig: div factors must be > 0");
  if (cycles < 1) throw ValidationError("TrainConfig: cycles must be >= 1");
  if (patience < 1) throw ValidationError("TrainConfig: patience must be >= 1");
  if (!(min_delta >= 0.0)) throw ValidationError("TrainConfig: min_delta must be >= 0");
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw ValidationError("TrainConfig: alpha and beta must be finite and >= 0");
  }
  bounds.validate();
}

double onecycle_lr(long step, long total_steps, const TrainConfig& cfg) {
  if (total_steps < 1 || step < 0 || step >= total_steps) {
    throw ValidationError("onecycle_lr: need 0 <= step < total_steps");
  }
  const long cycle_len = std::max(1L, total_steps / cfg.cycles);
  const long c = std::min<long>(step / cycle_len, cfg.cycles - 1);
  const long len = c == cfg.cycles - 1 ? total_steps - c * cycle_len : cycle_len;
  const long s = step - c * cycle_len;

  const double initial = cfg.max_lr / cfg.div_factor;
  const double final_lr = cfg.max_lr / cfg.final_div_factor;
  const auto warm = static_cast<long>(std::floor(cfg.pct_start * static_cast<double>(len)));
  const auto cosine = [](double from, double to, double frac) {
    return to + (from - to) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
  };
  if (s < warm) return cosine(initial, cfg.max_lr, static_cast<double>(s) / static_cast<double>(warm));
  const long down = len - 1 - warm;
  if (down <= 0) return cfg.max_lr;
  return cosine(cfg.max_lr, final_lr, static_cast<double>(s - warm) / static_cast<double>(down));
}

std::vector<double> reference_prices(const MertonParams& calibrated, const QuoteDataset& data) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    OptionSpec spec = data.rows[i].spec;
    spec.style = ExerciseStyle::European;
    out[i] = price_european_paper(calibrated, spec, kDefaultSeriesTerms);
  }
  return out;
}

namespace {

constexpr std::size_t kEvalChunk = 4096;

std::vector<double> gather(std::span<const double> v, const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

void check_kind(const PinnModel& model, const QuoteDataset& data) {
  for (const auto& r : data.rows) {
    if (r.spec.kind != model.kind) {
      throw ValidationError("dataset holds " + std::string(to_string(r.spec.kind)) + " rows but the model prices " +
                            std::string(to_string(model.kind)));
    }
  }
}

/// Eval-mode loss over the given rows, evaluated in chunks.
LossValue rows_loss(PinnModel& model, const QuoteDataset& data, std::span<const double> v_e_ref,
                    const std::vector<std::size_t>& idx, double alpha, double beta) {
  LossValue acc;
  for (std::size_t start = 0; start < idx.size(); start += kEvalChunk) {
    const std::size_t end = std::min(idx.size(), start + kEvalChunk);
    const std::span<const std::size_t> part(idx.data() + start, end - start);
    const Batch b = make_batch(data, part);
    std::vector<double> ref(part.size());
    for (std::size_t k = 0; k < part.size(); ++k) ref[k] = v_e_ref[part[k]];
    const auto l = loss(model, b, ref, alpha, beta);
    const double w = static_cast<double>(part.size()) / static_cast<double>(idx.size());
    acc.total += w * l.total;
    acc.physics += w * l.physics;
    acc.data += w * l.data;
  }
  return acc;
}

struct Adam {
  std::vector<Eigen::VectorXd> m, v;
  long t = 0;

  explicit Adam(const std::vector<ParamView>& views) {
    for (const auto& p : views) {
      m.push_back(Eigen::VectorXd::Zero(p.size));
      v.push_back(Eigen::VectorXd::Zero(p.size));
    }
  }

  void step(std::vector<ParamView>& views, const Gradients& g, double lr, const TrainConfig& cfg,
            const std::vector<char>& frozen) {
    ++t;
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < views.size(); ++i) {
      if (frozen[i]) continue;
      const auto& gi = g.values[i];
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * gi;
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * gi.cwiseProduct(gi);
      Eigen::Map<Eigen::VectorXd> p(views[i].data, views[i].size);
      p.array() -= lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + cfg.adam_eps);
    }
  }
};

}  // namespace

LossValue split_loss(PinnModel& model, const QuoteDataset& data, std::span<const double> v_e_ref, Split split,
                     double alpha, double beta) {
  const auto idx = data.indices(split);
  if (idx.empty()) throw ValidationError("split_loss: split '" + std::string(to_string(split)) + "' is empty");
  if (v_e_ref.size() != data.size()) throw ValidationError("split_loss: v_e_ref length must match the dataset");
  return rows_loss(model, data, v_e_ref, idx, alpha, beta);
}

TrainResult train(PinnModel model, const QuoteDataset& data, std::span<const double> v_e_ref,
                  const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  check_kind(model, data);
  if (v_e_ref.size() != data.size()) throw ValidationError("train: v_e_ref length must match the dataset");
  auto train_idx = data.indices(Split::Train);
  const auto val_idx = data.indices(Split::Val);
  if (train_idx.empty() || val_idx.empty()) throw ValidationError("train: need nonempty train and val splits");

  TrainResult res;
  res.initial_val_loss = rows_loss(model, data, v_e_ref, val_idx, cfg.alpha, cfg.beta).total;
  res.best_val_loss = res.initial_val_loss;
  res.model = model;

  const auto steps_per_epoch = static_cast<long>((train_idx.size() + cfg.batch_size - 1) / cfg.batch_size);
  const long total_steps = steps_per_epoch * cfg.epochs;
  auto views = parameter_views(model);
  std::vector<char> frozen(views.size(), 0);
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (cfg.freeze_hidden && views[i].group == ParamGroup::Hidden) frozen[i] = 1;
    if (model.mode == PhysicsMode::BS && views[i].group == ParamGroup::Physics &&
        (views[i].name == "physics.lambda" || views[i].name == "physics.mu_y" ||
         views[i].name == "physics.sigma_y")) {
      frozen[i] = 1;
    }
  }
  // frozen hidden layers keep their batch-norm statistics as well
  const ForwardMode mode = cfg.freeze_hidden ? ForwardMode{true, false, false} : ForwardMode::train();
  Adam adam(views);
  Rng shuffle_rng(derive_seed(cfg.seed, 0));
  Rng dropout_rng(derive_seed(cfg.seed, 1));
  clamp_physics(model, cfg.bounds);

  long step = 0;
  int wait = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(train_idx);
    double loss_sum = 0.0;
    double lr = 0.0;
    bool diverged = false;
    for (long b = 0; b < steps_per_epoch; ++b, ++step) {
      const std::size_t start = static_cast<std::size_t>(b) * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t end = std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> rows(train_idx.data() + start, end - start);
      const Batch batch = make_batch(data, rows);
      const std::vector<double> ref = gather(v_e_ref, std::vector<std::size_t>(rows.begin(), rows.end()));
      Gradients g;
      try {
        g = backward(model, batch, ref, cfg.alpha, cfg.beta, mode, &dropout_rng);
      } catch (const std::runtime_error& e) {
        res.message = std::string("diverged: ") + e.what();
        diverged = true;
        break;
      }
      if (!std::isfinite(g.loss.total)) {
        res.message = "diverged: non-finite training loss";
        diverged = true;
        break;
      }
      lr = onecycle_lr(step, total_steps, cfg);
      adam.step(views, g, lr, cfg, frozen);
      clamp_physics(model, cfg.bounds);
      loss_sum += g.loss.total * static_cast<double>(rows.size());
    }

    LossValue val;
    if (!diverged) {
      try {
        val = rows_loss(model, data, v_e_ref, val_idx, cfg.alpha, cfg.beta);
      } catch (const std::runtime_error& e) {
        res.message = std::string("diverged: ") + e.what();
        diverged = true;
      }
      if (!diverged && !std::isfinite(val.total)) {
        res.message = "diverged: non-finite validation loss";
        diverged = true;
      }
    }
    if (diverged) {
      res.diverged = true;
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_idx.size());
    rec.val_loss = val.total;
    rec.physics_loss = val.physics;
    rec.data_loss = val.data;
    rec.lr = lr;
    rec.physics = model.physics;
    rec.mixing = model.mixing();
    res.history.push_back(rec);

    if (val.total < res.best_val_loss - cfg.min_delta) {
      res.best_val_loss = val.total;
      res.best_epoch = epoch;
      res.model = model;
      wait = 0;
    } else if (++wait >= cfg.patience) {
      res.early_stopped = true;
      res.message = "early stop at epoch " + std::to_string(epoch);
      break;
    }
  }
  if (res.message.empty()) res.message = "completed " + std::to_string(res.history.size()) + " epochs";
  return res;
}

PinnModel make_model(OptionKind kind, PhysicsMode mode, const MertonParams& calibrated, const QuoteDataset& data,
                     std::uint64_t seed) {
  calibrated.validate();
  auto m = PinnModel::create(kind, mode, seed);
  const auto idx = data.indices(Split::Train);
  if (idx.empty()) throw ValidationError("make_model: training split is empty");
  double rate = 0.0;
  for (std::size_t i : idx) rate += data.rows[i].spec.rate;
  m.physics.rate = rate / static_cast<double>(idx.size());
  m.physics.sigma = calibrated.sigma;
  m.physics.lambda = mode == PhysicsMode::BS ? 0.0 : calibrated.lambda;
  m.physics.mu_y = calibrated.mu_y;
  m.physics.sigma_y = calibrated.sigma_y;
  m.mixing_logit = 0.0;
  m.set_normalization(data, Split::Train);
  return m;
}

Metrics evaluate(PinnModel& model, const QuoteDataset& data, Split split, EvalFilter filter) {
  std::vector<std::size_t> idx;
  for (std::size_t i : data.indices(split)) {
    if (filter == EvalFilter::DeepOtm && !(data.rows[i].price < 10.0)) continue;
    idx.push_back(i);
  }
  if (idx.empty()) throw ValidationError("evaluate: no rows after filtering");
  std::vector<double> pred, actual;
  pred.reserve(idx.size());
  actual.reserve(idx.size());
  for (std::size_t start = 0; start < idx.size(); start += kEvalChunk) {
    const std::size_t end = std::min(idx.size(), start + kEvalChunk);
    const Batch b = make_batch(data, std::span(idx.data() + start, end - start));
    const auto out = forward(model, b, ForwardMode::eval());
    for (Eigen::Index k = 0; k < out.v.size(); ++k) {
      pred.push_back(out.v(k));
      actual.push_back(b.targets(k));
    }
  }
  return compute_metrics(pred, actual);
}

TransferResult pretrain_transfer(const PinnModel& initial, const QuoteDataset& synthetic,
                                 std::span<const double> synthetic_ref, const QuoteDataset& real,
                                 std::span<const double> real_ref, const TrainConfig& stage1,
                                 const TrainConfig& stage2) {
  if (synthetic.empty() || real.empty()) throw ValidationError("pretrain_transfer: datasets must be nonempty");
  TransferResult r;
  r.stage1 = train(initial, synthetic, synthetic_ref, stage1);
  TrainConfig cfg2 = stage2;
  cfg2.freeze_hidden = true;
  r.stage2 = train(r.stage1.model, real, real_ref, cfg2);
  return r;
}

void TuneConfig::validate() const {
  if (n_startup < 2) throw ValidationError("TuneConfig: n_startup must be >= 2");
  if (n_trials < n_startup) throw ValidationError("TuneConfig: n_trials must be >= n_startup");
  if (epochs_per_trial < 1) throw ValidationError("TuneConfig: epochs_per_trial must be >= 1");
  if (!(alpha.low > 0.0 && alpha.high > alpha.low) || !(beta.low > 0.0 && beta.high > beta.low)) {
    throw ValidationError("TuneConfig: coefficient bounds must satisfy 0 < low < high");
  }
  if (!(gamma_split > 0.0 && gamma_split < 1.0)) throw ValidationError("TuneConfig: gamma_split must be in (0, 1)");
}

TuneResult tune_coefficients(const std::function<double(double, double)>& objective, const TuneConfig& cfg) {
  cfg.validate();
  TpeConfig tc;
  tc.bounds = {cfg.alpha, cfg.beta};
  tc.n_trials = cfg.n_trials;
  tc.n_startup = cfg.n_startup;
  tc.gamma = cfg.gamma_split;
  tc.seed = cfg.seed;
  const auto trials = tpe_minimize([&](std::span<const double> x) { return objective(x[0], x[1]); }, tc);
  TuneResult res;
  for (const auto& t : trials) res.log.push_back({t.index, t.x[0], t.x[1], t.value, t.best_so_far});
  const auto& best = trials[best_trial(trials)];
  res.alpha = best.x[0];
  res.beta = best.x[1];
  res.best_val_loss = best.value;
  return res;
}

TuneResult tune_coefficients(const QuoteDataset& data, std::span<const double> v_e_ref,
                             const std::function<PinnModel()>& model_factory, const TrainConfig& base,
                             const TuneConfig& cfg) {
  return tune_coefficients(
      [&](double alpha, double beta) {
        TrainConfig tc = base;
        tc.alpha = alpha;
        tc.beta = beta;
        tc.epochs = cfg.epochs_per_trial;
        auto r = train(model_factory(), data, v_e_ref, tc);
        if (r.diverged && r.best_epoch == 0) return std::numeric_limits<double>::infinity();
        return split_loss(r.model, data, v_e_ref, Split::Val, 0.0, 1.0).data;
      },
      cfg);
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,val_loss,physics_loss,data_loss,lr,rate,sigma,lambda,mu_y,sigma_y,mixing\n";
  out << std::setprecision(10);
  for (const auto& h : history) {
    out << h.epoch << ',' << h.train_loss << ',' << h.val_loss << ',' << h.physics_loss << ',' << h.data_loss << ','
        << h.lr;
    for (std::size_t k = 0; k < PhysicsParams::kSize; ++k) out << ',' << h.physics[k];
    out << ',' << h.mixing << '\n';
  }
}

void write_tuning_csv(std::ostream& out, const std::vector<TuneTrial>& log) {
  out << "trial,alpha,beta,val_loss\n";
  out << std::setprecision(12);
  for (const auto& t : log) out << t.trial << ',' << t.alpha << ',' << t.beta << ',' << t.val_loss << '\n';
}

}  // namespace jdpinn
