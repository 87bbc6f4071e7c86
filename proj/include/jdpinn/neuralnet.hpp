#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jdpinn/core.hpp"
#include "jdpinn/rng.hpp"

namespace jdpinn {

/// Merton: the physics pricer uses all five jump-diffusion scalars.
/// BS: lambda is held at 0 and the jump scalars are frozen.
enum class PhysicsMode { Merton, BS };

std::string_view to_string(PhysicsMode mode);
PhysicsMode parse_physics_mode(std::string_view s);

/// Trainable scalars of the European pricer.
struct PhysicsParams {
  double rate = 0.0;
  double sigma = 0.2;
  double lambda = 0.0;
  double mu_y = 0.0;
  double sigma_y = 0.1;

  static constexpr std::size_t kSize = 5;
  static constexpr std::array<const char*, kSize> kNames{"rate", "sigma", "lambda", "mu_y", "sigma_y"};

  double& operator[](std::size_t i);
  double operator[](std::size_t i) const;
  bool operator==(const PhysicsParams&) const = default;
};

/// Rows of (S, K, T, r) with observed prices.
struct Batch {
  Eigen::MatrixXd features;  ///< n x 4
  Eigen::VectorXd targets;   ///< n

  Eigen::Index size() const { return features.rows(); }
  void validate() const;
};

Batch make_batch(const QuoteDataset& data, std::span<const std::size_t> rows);

struct BatchNorm {
  Eigen::VectorXd gamma, beta, running_mean, running_var;
};

/// Hybrid American pricer: a * V_E(physics) + (1 - a) * premium(x), with the
/// premium from a 4 -> 128 -> 128 -> 1 network
/// (Linear, BatchNorm, ReLU, Dropout twice, then Linear and Softplus).
struct PinnModel {
  static constexpr int kInputs = 4;
  static constexpr int kHidden = 128;
  static constexpr int kFormatVersion = 1;

  Eigen::MatrixXd w1, w2, w3;  ///< out x in
  Eigen::VectorXd b1, b2, b3;
  BatchNorm bn1, bn2;
  double dropout = 0.3;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  PhysicsParams physics;
  double mixing_logit = 0.0;
  Eigen::VectorXd input_mean;  ///< 4
  Eigen::VectorXd input_std;   ///< 4
  OptionKind kind = OptionKind::Call;
  PhysicsMode mode = PhysicsMode::Merton;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, unit BN
  /// scale, zero shift, identity running statistics and normalization.
  static PinnModel create(OptionKind kind, PhysicsMode mode, std::uint64_t seed);

  double mixing() const;
  /// Physics scalars actually used by the pricer (lambda forced to 0 in BS mode).
  PhysicsParams effective_physics() const;
  void set_normalization(const QuoteDataset& data, Split split = Split::Train);
};

/// Flat view over every trainable tensor, in a fixed order.
enum class ParamGroup { Hidden, Output, Mixing, Physics };

struct ParamView {
  std::string name;
  ParamGroup group;
  double* data;
  Eigen::Index size;
};

std::vector<ParamView> parameter_views(PinnModel& model);

struct ForwardMode {
  bool dropout = false;
  bool batch_stats = false;     ///< normalize hidden layers with batch statistics
  bool update_running = false;  ///< fold batch statistics into running estimates

  static ForwardMode train() { return {true, true, true}; }
  static ForwardMode eval() { return {}; }
};

struct ForwardResult {
  Eigen::VectorXd v;        ///< hybrid price
  Eigen::VectorXd v_e;      ///< physics European price
  Eigen::VectorXd premium;  ///< network output
};

/// Paper-variant European series evaluated with the model's physics scalars,
/// for every row of the batch.
Eigen::VectorXd physics_prices(const PinnModel& model, const PhysicsParams& physics, const Batch& batch);

/// `rng` supplies dropout masks and may be null when mode.dropout is false.
/// Throws std::runtime_error naming the layer if an activation is non-finite.
ForwardResult forward(PinnModel& model, const Batch& batch, ForwardMode mode, Rng* rng = nullptr);

struct LossValue {
  double total = 0.0;
  double physics = 0.0;  ///< L_p
  double data = 0.0;     ///< L_d
};

LossValue loss_from(const ForwardResult& out, const Batch& batch, std::span<const double> v_e_ref, double alpha,
                    double beta);

/// Eval-mode forward followed by the weighted loss.
LossValue loss(PinnModel& model, const Batch& batch, std::span<const double> v_e_ref, double alpha, double beta);

/// One gradient array per entry of parameter_views(), same order and sizes.
struct Gradients {
  std::vector<Eigen::VectorXd> values;
  LossValue loss;
};

/// Reverse-mode gradients for the network, batch-norm and mixing logit; central
/// finite differences (relative step `fd_step`) for the physics scalars with
/// the network output held fixed. Physics scalars frozen by the mode get zero.
/// Throws std::runtime_error naming the parameter on a non-finite gradient.
Gradients backward(PinnModel& model, const Batch& batch, std::span<const double> v_e_ref, double alpha, double beta,
                   ForwardMode mode, Rng* rng = nullptr, double fd_step = 1e-5);

/// Projects the physics scalars into bounds (lambda, mu_y, sigma_y are left
/// untouched in BS mode apart from lambda = 0).
void clamp_physics(PinnModel& model, const ParamBounds& bounds);

std::string serialize(const PinnModel& model);
PinnModel deserialize(std::string_view text);
void save_model(const std::filesystem::path& path, const PinnModel& model);
PinnModel load_model(const std::filesystem::path& path);

}  // namespace jdpinn
