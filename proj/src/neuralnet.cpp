#include "jdpinn/neuralnet.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "jdpinn/analytical.hpp"

namespace jdpinn {

std::string_view to_string(PhysicsMode mode) { return mode == PhysicsMode::Merton ? "merton" : "bs"; }

PhysicsMode parse_physics_mode(std::string_view s) {
  if (s == "merton" || s == "Merton") return PhysicsMode::Merton;
  if (s == "bs" || s == "BS") return PhysicsMode::BS;
  throw ValidationError("unknown physics mode '" + std::string(s) + "' (expected merton or bs)");
}

double& PhysicsParams::operator[](std::size_t i) {
  switch (i) {
    case 0: return rate;
    case 1: return sigma;
    case 2: return lambda;
    case 3: return mu_y;
    default: return sigma_y;
  }
}

double PhysicsParams::operator[](std::size_t i) const { return const_cast<PhysicsParams&>(*this)[i]; }

void Batch::validate() const {
  if (features.rows() < 1 || features.cols() != PinnModel::kInputs) {
    throw ValidationError("Batch: features must be n x 4 with n >= 1");
  }
  if (targets.size() != features.rows()) throw ValidationError("Batch: targets length must match rows");
  if (!features.allFinite() || !targets.allFinite()) throw ValidationError("Batch: non-finite entries");
}

Batch make_batch(const QuoteDataset& data, std::span<const std::size_t> rows) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  b.features.resize(n, PinnModel::kInputs);
  b.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = data.rows[rows[static_cast<std::size_t>(i)]];
    b.features.row(i) << r.spec.spot, r.spec.strike, r.spec.tau, r.spec.rate;
    b.targets(i) = r.price;
  }
  return b;
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

BatchNorm fresh_bn(int n) {
  return {Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
}

void init_linear(Eigen::MatrixXd& w, Eigen::VectorXd& b, int out, int in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  w.resize(out, in);
  b.resize(out);
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-bound, bound);
}

/// Paper-variant series for one row. No validation: finite-difference probes
/// may sit marginally outside the admissible region.
double series_price(OptionKind kind, double s, double k, double t, const PhysicsParams& p) {
  if (t <= 0.0) return payoff(kind, k, s);
  const double lt = p.lambda * t;
  const double k_bar = std::expm1(p.mu_y + 0.5 * p.sigma_y * p.sigma_y);
  const double disc_k = k * std::exp(-p.rate * t);
  const double log_sk = std::log(s / k);
  const double base_drift = p.rate - p.lambda * k_bar;
  const double s2 = p.sigma * p.sigma, sy2 = p.sigma_y * p.sigma_y;
  const double growth = std::exp(std::max(p.mu_y, 0.0));
  double w = lt > 0.0 ? std::exp(-lt) : 1.0;
  double spot_n = s;
  const double jump_factor = std::exp(p.mu_y);
  double price = 0.0;
  for (int n = 0; n <= kDefaultSeriesTerms; ++n) {
    const double sig2n = s2 + n * sy2 / t;
    const double sd = std::sqrt(sig2n * t);
    const double d1 = (log_sk + (base_drift + n * p.mu_y + 0.5 * sig2n) * t) / sd;
    const double d2 = d1 - sd;
    const double term = kind == OptionKind::Call ? spot_n * norm_cdf(d1) - disc_k * norm_cdf(d2)
                                                 : disc_k * norm_cdf(-d2) - spot_n * norm_cdf(-d1);
    price += w * term;
    if (lt <= 0.0) break;
    // once the weight ratio is below 1/2 the remaining tail is at most twice
    // the current term bound
    if (n + 1 > 2.0 * lt * growth && w * (spot_n + disc_k) < 1e-17 * (std::abs(price) + 1e-12)) break;
    w *= lt / (n + 1);
    spot_n *= jump_factor;
    if (w == 0.0) break;
  }
  return price;
}

struct Tape {
  Eigen::MatrixXd x;                   // 4 x n standardized inputs
  Eigen::MatrixXd xhat1, y1, d1, mask1;  // hidden layer 1
  Eigen::MatrixXd xhat2, y2, d2, mask2;  // hidden layer 2
  Eigen::VectorXd inv1, inv2;
  bool batch1 = false, batch2 = false;
  Eigen::RowVectorXd z3;
  ForwardResult out;
};

void check_finite(const Eigen::MatrixXd& m, const char* layer) {
  if (!m.allFinite()) throw std::runtime_error(std::string("non-finite activation in layer ") + layer);
}

/// Linear + BatchNorm + ReLU + Dropout. Returns the dropout output.
void hidden_forward(const Eigen::MatrixXd& in, const Eigen::MatrixXd& w, const Eigen::VectorXd& b, BatchNorm& bn,
                    const PinnModel& model, ForwardMode mode, Rng* rng, Eigen::MatrixXd& xhat, Eigen::MatrixXd& y,
                    Eigen::MatrixXd& out, Eigen::MatrixXd& mask, Eigen::VectorXd& inv, bool& used_batch,
                    const char* name) {
  Eigen::MatrixXd h = w * in;
  h.colwise() += b;
  check_finite(h, name);
  const Eigen::Index n = h.cols();
  used_batch = mode.batch_stats && n > 1;
  Eigen::VectorXd mean;
  if (used_batch) {
    mean = h.rowwise().mean();
    const Eigen::VectorXd var = (h.colwise() - mean).array().square().rowwise().mean();
    inv = (var.array() + model.bn_eps).rsqrt();
    if (mode.update_running) {
      const double m = model.bn_momentum;
      bn.running_mean = (1.0 - m) * bn.running_mean + m * mean;
      bn.running_var = (1.0 - m) * bn.running_var + m * var * (static_cast<double>(n) / (n - 1));
    }
  } else {
    mean = bn.running_mean;
    inv = (bn.running_var.array() + model.bn_eps).rsqrt();
  }
  xhat = (h.colwise() - mean).array().colwise() * inv.array();
  y = (xhat.array().colwise() * bn.gamma.array()).colwise() + bn.beta.array();
  out = y.cwiseMax(0.0);
  if (mode.dropout && model.dropout > 0.0) {
    if (!rng) throw std::invalid_argument("forward: dropout requires an rng");
    const double keep = 1.0 - model.dropout;
    mask.resize(out.rows(), out.cols());
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = rng->uniform() < keep ? 1.0 / keep : 0.0;
    }
    out.array() *= mask.array();
  } else {
    mask.resize(0, 0);
  }
  check_finite(out, name);
}

Tape run_forward(PinnModel& model, const Batch& batch, ForwardMode mode, Rng* rng) {
  batch.validate();
  Tape t;
  const Eigen::RowVectorXd mean = model.input_mean.transpose();
  const Eigen::RowVectorXd sd = model.input_std.transpose();
  t.x = ((batch.features.rowwise() - mean).array().rowwise() / sd.array()).matrix().transpose();
  check_finite(t.x, "input");
  hidden_forward(t.x, model.w1, model.b1, model.bn1, model, mode, rng, t.xhat1, t.y1, t.d1, t.mask1, t.inv1, t.batch1,
                 "hidden1");
  hidden_forward(t.d1, model.w2, model.b2, model.bn2, model, mode, rng, t.xhat2, t.y2, t.d2, t.mask2, t.inv2, t.batch2,
                 "hidden2");
  t.z3 = model.w3 * t.d2;
  t.z3.array() += model.b3(0);
  check_finite(t.z3, "output");

  const Eigen::Index n = batch.size();
  t.out.premium.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) t.out.premium(i) = softplus(t.z3(i));
  t.out.v_e = physics_prices(model, model.effective_physics(), batch);
  if (!t.out.v_e.allFinite()) throw std::runtime_error("non-finite activation in layer physics");
  const double a = model.mixing();
  t.out.v = a * t.out.v_e + (1.0 - a) * t.out.premium;
  return t;
}

LossValue weighted_loss(const Eigen::VectorXd& v, const Eigen::VectorXd& v_e, const Batch& batch,
                        std::span<const double> v_e_ref, double alpha, double beta) {
  const auto n = batch.size();
  if (static_cast<Eigen::Index>(v_e_ref.size()) != n || v.size() != n) {
    throw ValidationError("loss: v_e_ref length must match the batch");
  }
  const Eigen::Map<const Eigen::VectorXd> ref(v_e_ref.data(), n);
  LossValue l;
  l.physics = (v_e - ref).squaredNorm() / static_cast<double>(n);
  l.data = (v - batch.targets).squaredNorm() / static_cast<double>(n);
  l.total = alpha * l.physics + beta * l.data;
  return l;
}

void bn_backward(const Eigen::MatrixXd& g_y, const Eigen::MatrixXd& xhat, const Eigen::VectorXd& inv,
                 const BatchNorm& bn, bool batch_stats, Eigen::VectorXd& g_gamma, Eigen::VectorXd& g_beta,
                 Eigen::MatrixXd& g_h) {
  g_gamma = (g_y.array() * xhat.array()).rowwise().sum();
  g_beta = g_y.rowwise().sum();
  const Eigen::MatrixXd g_xhat = g_y.array().colwise() * bn.gamma.array();
  if (batch_stats) {
    const double n = static_cast<double>(g_y.cols());
    const Eigen::VectorXd sum_g = g_xhat.rowwise().sum();
    const Eigen::VectorXd sum_gx = (g_xhat.array() * xhat.array()).rowwise().sum();
    g_h = ((n * g_xhat).colwise() - sum_g - (xhat.array().colwise() * sum_gx.array()).matrix());
    g_h = g_h.array().colwise() * (inv.array() / n);
  } else {
    g_h = g_xhat.array().colwise() * inv.array();
  }
}

/// Smallest admissible value of each physics scalar for finite-difference probes.
constexpr std::array<double, PhysicsParams::kSize> kProbeFloor{-1e300, 1e-300, 0.0, -1e300, 1e-300};

}  // namespace

PinnModel PinnModel::create(OptionKind kind, PhysicsMode mode, std::uint64_t seed) {
  PinnModel m;
  Rng rng(seed);
  init_linear(m.w1, m.b1, kHidden, kInputs, rng);
  init_linear(m.w2, m.b2, kHidden, kHidden, rng);
  init_linear(m.w3, m.b3, 1, kHidden, rng);
  m.bn1 = fresh_bn(kHidden);
  m.bn2 = fresh_bn(kHidden);
  m.input_mean = Eigen::VectorXd::Zero(kInputs);
  m.input_std = Eigen::VectorXd::Ones(kInputs);
  m.kind = kind;
  m.mode = mode;
  if (mode == PhysicsMode::BS) m.physics.lambda = 0.0;
  return m;
}

double PinnModel::mixing() const { return sigmoid(mixing_logit); }

PhysicsParams PinnModel::effective_physics() const {
  PhysicsParams p = physics;
  if (mode == PhysicsMode::BS) p.lambda = 0.0;
  return p;
}

void PinnModel::set_normalization(const QuoteDataset& data, Split split) {
  const auto idx = data.indices(split);
  if (idx.empty()) throw ValidationError("set_normalization: split is empty");
  const Batch b = make_batch(data, idx);
  input_mean = b.features.colwise().mean().transpose();
  input_std.resize(kInputs);
  for (int c = 0; c < kInputs; ++c) {
    const double var = (b.features.col(c).array() - input_mean(c)).square().mean();
    input_std(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
}

std::vector<ParamView> parameter_views(PinnModel& m) {
  std::vector<ParamView> v{
      {"w1", ParamGroup::Hidden, m.w1.data(), m.w1.size()},
      {"b1", ParamGroup::Hidden, m.b1.data(), m.b1.size()},
      {"bn1.gamma", ParamGroup::Hidden, m.bn1.gamma.data(), m.bn1.gamma.size()},
      {"bn1.beta", ParamGroup::Hidden, m.bn1.beta.data(), m.bn1.beta.size()},
      {"w2", ParamGroup::Hidden, m.w2.data(), m.w2.size()},
      {"b2", ParamGroup::Hidden, m.b2.data(), m.b2.size()},
      {"bn2.gamma", ParamGroup::Hidden, m.bn2.gamma.data(), m.bn2.gamma.size()},
      {"bn2.beta", ParamGroup::Hidden, m.bn2.beta.data(), m.bn2.beta.size()},
      {"w3", ParamGroup::Output, m.w3.data(), m.w3.size()},
      {"b3", ParamGroup::Output, m.b3.data(), m.b3.size()},
      {"mixing_logit", ParamGroup::Mixing, &m.mixing_logit, 1},
  };
  for (std::size_t i = 0; i < PhysicsParams::kSize; ++i) {
    v.push_back({std::string("physics.") + PhysicsParams::kNames[i], ParamGroup::Physics, &m.physics[i], 1});
  }
  return v;
}

Eigen::VectorXd physics_prices(const PinnModel& model, const PhysicsParams& physics, const Batch& batch) {
  Eigen::VectorXd out(batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    out(i) = series_price(model.kind, batch.features(i, 0), batch.features(i, 1), batch.features(i, 2), physics);
  }
  return out;
}

ForwardResult forward(PinnModel& model, const Batch& batch, ForwardMode mode, Rng* rng) {
  return run_forward(model, batch, mode, rng).out;
}

LossValue loss_from(const ForwardResult& out, const Batch& batch, std::span<const double> v_e_ref, double alpha,
                    double beta) {
  return weighted_loss(out.v, out.v_e, batch, v_e_ref, alpha, beta);
}

LossValue loss(PinnModel& model, const Batch& batch, std::span<const double> v_e_ref, double alpha, double beta) {
  return loss_from(forward(model, batch, ForwardMode::eval()), batch, v_e_ref, alpha, beta);
}

Gradients backward(PinnModel& model, const Batch& batch, std::span<const double> v_e_ref, double alpha, double beta,
                   ForwardMode mode, Rng* rng, double fd_step) {
  const Tape t = run_forward(model, batch, mode, rng);
  Gradients g;
  g.loss = weighted_loss(t.out.v, t.out.v_e, batch, v_e_ref, alpha, beta);
  const auto n = static_cast<double>(batch.size());
  const double a = model.mixing();

  const Eigen::VectorXd g_v = (2.0 * beta / n) * (t.out.v - batch.targets);
  const double g_a = g_v.dot(t.out.v_e - t.out.premium);
  Eigen::RowVectorXd g_z3(t.z3.size());
  for (Eigen::Index i = 0; i < g_z3.size(); ++i) g_z3(i) = (1.0 - a) * g_v(i) * sigmoid(t.z3(i));

  const Eigen::MatrixXd g_w3 = g_z3 * t.d2.transpose();
  Eigen::VectorXd g_b3(1);
  g_b3(0) = g_z3.sum();

  Eigen::MatrixXd g_d2 = model.w3.transpose() * g_z3;
  if (t.mask2.size()) g_d2.array() *= t.mask2.array();
  const Eigen::MatrixXd g_y2 = (t.y2.array() > 0.0).select(g_d2, 0.0);
  Eigen::VectorXd g_gamma2, g_beta2;
  Eigen::MatrixXd g_h2;
  bn_backward(g_y2, t.xhat2, t.inv2, model.bn2, t.batch2, g_gamma2, g_beta2, g_h2);
  const Eigen::MatrixXd g_w2 = g_h2 * t.d1.transpose();
  const Eigen::VectorXd g_b2 = g_h2.rowwise().sum();

  Eigen::MatrixXd g_d1 = model.w2.transpose() * g_h2;
  if (t.mask1.size()) g_d1.array() *= t.mask1.array();
  const Eigen::MatrixXd g_y1 = (t.y1.array() > 0.0).select(g_d1, 0.0);
  Eigen::VectorXd g_gamma1, g_beta1;
  Eigen::MatrixXd g_h1;
  bn_backward(g_y1, t.xhat1, t.inv1, model.bn1, t.batch1, g_gamma1, g_beta1, g_h1);
  const Eigen::MatrixXd g_w1 = g_h1 * t.x.transpose();
  const Eigen::VectorXd g_b1 = g_h1.rowwise().sum();

  const auto flat = [](const Eigen::MatrixXd& m) { return Eigen::VectorXd(m.reshaped()); };
  g.values = {flat(g_w1), g_b1, g_gamma1, g_beta1, flat(g_w2), g_b2, g_gamma2, g_beta2, flat(g_w3), g_b3};
  g.values.push_back(Eigen::VectorXd::Constant(1, g_a * a * (1.0 - a)));

  // physics scalars: the premium is independent of them, so only V_E moves
  const auto loss_at = [&](const PhysicsParams& p) {
    const Eigen::VectorXd v_e = physics_prices(model, p, batch);
    const Eigen::VectorXd v = a * v_e + (1.0 - a) * t.out.premium;
    return weighted_loss(v, v_e, batch, v_e_ref, alpha, beta).total;
  };
  const PhysicsParams base = model.effective_physics();
  for (std::size_t k = 0; k < PhysicsParams::kSize; ++k) {
    const bool frozen = model.mode == PhysicsMode::BS && k >= 2;
    double d = 0.0;
    if (!frozen && (alpha != 0.0 || beta != 0.0)) {
      const double h = fd_step * std::max(std::abs(base[k]), 1e-2);
      PhysicsParams lo = base, hi = base;
      if (base[k] - h > kProbeFloor[k]) {
        lo[k] -= h;
        hi[k] += h;
        d = (loss_at(hi) - loss_at(lo)) / (2.0 * h);
      } else {
        PhysicsParams hi2 = base;
        hi[k] += h;
        hi2[k] += 2.0 * h;
        d = (-3.0 * g.loss.total + 4.0 * loss_at(hi) - loss_at(hi2)) / (2.0 * h);
      }
    }
    g.values.push_back(Eigen::VectorXd::Constant(1, d));
  }

  const auto views = parameter_views(model);
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (!g.values[i].allFinite()) throw std::runtime_error("non-finite gradient for parameter " + views[i].name);
  }
  return g;
}

void clamp_physics(PinnModel& model, const ParamBounds& bounds) {
  auto& p = model.physics;
  p.rate = bounds.rate.clamp(p.rate);
  p.sigma = bounds.sigma.clamp(p.sigma);
  if (model.mode == PhysicsMode::BS) {
    p.lambda = 0.0;
    return;
  }
  p.lambda = bounds.lambda.clamp(p.lambda);
  p.mu_y = bounds.mu_y.clamp(p.mu_y);
  p.sigma_y = bounds.sigma_y.clamp(p.sigma_y);
}

// ---- serialization -------------------------------------------------------

namespace {

using nlohmann::ordered_json;

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd matrix_from(const ordered_json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols) {
    throw ValidationError(std::string("model: unexpected shape for ") + name);
  }
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ValidationError(std::string("model: wrong element count for ") + name);
  }
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

Eigen::VectorXd vector_from(const ordered_json& j, Eigen::Index n, const char* name) {
  return matrix_from(j, n, 1, name);
}

ordered_json bn_json(const BatchNorm& bn) {
  return {{"gamma", matrix_json(bn.gamma)},
          {"beta", matrix_json(bn.beta)},
          {"running_mean", matrix_json(bn.running_mean)},
          {"running_var", matrix_json(bn.running_var)}};
}

BatchNorm bn_from(const ordered_json& j, int n) {
  return {vector_from(j.at("gamma"), n, "bn.gamma"), vector_from(j.at("beta"), n, "bn.beta"),
          vector_from(j.at("running_mean"), n, "bn.running_mean"),
          vector_from(j.at("running_var"), n, "bn.running_var")};
}

}  // namespace

std::string serialize(const PinnModel& m) {
  ordered_json j;
  j["format"] = "jdpinn-model";
  j["version"] = PinnModel::kFormatVersion;
  j["architecture"] = {{"inputs", PinnModel::kInputs},
                       {"hidden", {PinnModel::kHidden, PinnModel::kHidden}},
                       {"dropout", m.dropout},
                       {"bn_momentum", m.bn_momentum},
                       {"bn_eps", m.bn_eps},
                       {"layout", "column-major"}};
  j["kind"] = std::string(to_string(m.kind));
  j["physics_mode"] = std::string(to_string(m.mode));
  ordered_json phys;
  for (std::size_t i = 0; i < PhysicsParams::kSize; ++i) phys[PhysicsParams::kNames[i]] = m.physics[i];
  j["physics"] = phys;
  j["mixing_logit"] = m.mixing_logit;
  j["input_mean"] = matrix_json(m.input_mean);
  j["input_std"] = matrix_json(m.input_std);
  j["layers"] = {{"w1", matrix_json(m.w1)}, {"b1", matrix_json(m.b1)}, {"bn1", bn_json(m.bn1)},
                 {"w2", matrix_json(m.w2)}, {"b2", matrix_json(m.b2)}, {"bn2", bn_json(m.bn2)},
                 {"w3", matrix_json(m.w3)}, {"b3", matrix_json(m.b3)}};
  return j.dump();
}

PinnModel deserialize(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw ValidationError(std::string("model: corrupt payload: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "jdpinn-model") throw ValidationError("model: unknown format");
    const int version = j.at("version").get<int>();
    if (version != PinnModel::kFormatVersion) {
      throw ValidationError("model: version " + std::to_string(version) + " not supported (expected " +
                            std::to_string(PinnModel::kFormatVersion) + ")");
    }
    const auto& arch = j.at("architecture");
    if (arch.at("inputs").get<int>() != PinnModel::kInputs ||
        arch.at("hidden") != ordered_json({PinnModel::kHidden, PinnModel::kHidden})) {
      throw ValidationError("model: unsupported architecture");
    }
    PinnModel m;
    constexpr int H = PinnModel::kHidden, I = PinnModel::kInputs;
    m.dropout = arch.at("dropout").get<double>();
    m.bn_momentum = arch.at("bn_momentum").get<double>();
    m.bn_eps = arch.at("bn_eps").get<double>();
    m.kind = parse_kind(j.at("kind").get<std::string>());
    m.mode = parse_physics_mode(j.at("physics_mode").get<std::string>());
    for (std::size_t i = 0; i < PhysicsParams::kSize; ++i) {
      m.physics[i] = j.at("physics").at(PhysicsParams::kNames[i]).get<double>();
    }
    m.mixing_logit = j.at("mixing_logit").get<double>();
    m.input_mean = vector_from(j.at("input_mean"), I, "input_mean");
    m.input_std = vector_from(j.at("input_std"), I, "input_std");
    const auto& L = j.at("layers");
    m.w1 = matrix_from(L.at("w1"), H, I, "w1");
    m.b1 = vector_from(L.at("b1"), H, "b1");
    m.bn1 = bn_from(L.at("bn1"), H);
    m.w2 = matrix_from(L.at("w2"), H, H, "w2");
    m.b2 = vector_from(L.at("b2"), H, "b2");
    m.bn2 = bn_from(L.at("bn2"), H);
    m.w3 = matrix_from(L.at("w3"), 1, H, "w3");
    m.b3 = vector_from(L.at("b3"), 1, "b3");
    return m;
  } catch (const ordered_json::exception& e) {
    throw ValidationError(std::string("model: malformed payload: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const PinnModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize(model) << '\n';
}

PinnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace jdpinn
