#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "jdpinn/core.hpp"
#include "jdpinn/neuralnet.hpp"
#include "jdpinn/tpe.hpp"

namespace jdpinn {

struct TrainConfig {
  int epochs = 1000;
  int batch_size = 256;
  double max_lr = 1e-2;
  double pct_start = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;
  int cycles = 1;  ///< schedule restarts per run
  int patience = 50;
  double min_delta = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  std::uint64_t seed = 42;
  bool freeze_hidden = false;
  ParamBounds bounds;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

/// OneCycle learning rate at optimizer step `step` of `total_steps`: cosine
/// rise from max_lr/div_factor to max_lr over floor(pct_start * steps) steps,
/// then cosine decay to max_lr/final_div_factor. With cycles > 1 the run is
/// cut into equal cycles and the schedule restarts in each.
double onecycle_lr(long step, long total_steps, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;    ///< mean training-mode loss over the epoch's batches
  double val_loss = 0.0;      ///< eval-mode total loss on the validation split
  double physics_loss = 0.0;  ///< validation L_p
  double data_loss = 0.0;     ///< validation L_d
  double lr = 0.0;            ///< learning rate at the epoch's last step
  PhysicsParams physics;
  double mixing = 0.0;
};

struct TrainResult {
  PinnModel model;  ///< best-validation snapshot
  std::vector<EpochRecord> history;
  double initial_val_loss = 0.0;
  double best_val_loss = 0.0;
  int best_epoch = 0;  ///< 0 means the initial model
  bool early_stopped = false;
  bool diverged = false;
  std::string message;
};

/// European reference prices of every row from frozen calibrated parameters
/// (paper-variant series at each row's own rate).
std::vector<double> reference_prices(const MertonParams& calibrated, const QuoteDataset& data);

/// Trains on the Train split and early-stops on the Val split. Normalization
/// statistics are taken from the model as given.
TrainResult train(PinnModel model, const QuoteDataset& data, std::span<const double> v_e_ref,
                  const TrainConfig& cfg);

/// Eval-mode total loss over the rows of one split.
LossValue split_loss(PinnModel& model, const QuoteDataset& data, std::span<const double> v_e_ref, Split split,
                     double alpha, double beta);

/// Fresh model with physics scalars at the calibrated values, trainable rate
/// at the mean training rate, mixing weight 1/2 and normalization from the
/// training split.
PinnModel make_model(OptionKind kind, PhysicsMode mode, const MertonParams& calibrated, const QuoteDataset& data,
                     std::uint64_t seed);

enum class EvalFilter { All, DeepOtm };

/// Eval-mode metrics of the hybrid price on one split. DeepOtm keeps rows with
/// observed price strictly below 10.
Metrics evaluate(PinnModel& model, const QuoteDataset& data, Split split, EvalFilter filter = EvalFilter::All);

struct TransferResult {
  TrainResult stage1;
  TrainResult stage2;
};

/// Stage 1 trains on `synthetic`; stage 2 freezes the hidden layers and
/// continues on `real` from the stage-1 model.
TransferResult pretrain_transfer(const PinnModel& initial, const QuoteDataset& synthetic,
                                 std::span<const double> synthetic_ref, const QuoteDataset& real,
                                 std::span<const double> real_ref, const TrainConfig& stage1,
                                 const TrainConfig& stage2);

struct TuneConfig {
  int n_trials = 50;
  int epochs_per_trial = 100;
  Interval alpha{0.01, 1.0};
  Interval beta{0.01, 1.0};
  double gamma_split = 0.25;
  int n_startup = 10;
  std::uint64_t seed = 42;

  void validate() const;
};

struct TuneTrial {
  int trial = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double val_loss = 0.0;
  double best_so_far = 0.0;
};

struct TuneResult {
  double alpha = 0.0;
  double beta = 0.0;
  double best_val_loss = 0.0;
  std::vector<TuneTrial> log;
};

/// TPE search over (alpha, beta) for an arbitrary objective.
TuneResult tune_coefficients(const std::function<double(double alpha, double beta)>& objective,
                             const TuneConfig& cfg);

/// TPE search where each trial trains a fresh model for epochs_per_trial
/// epochs and reports its best validation data loss. Comparing trials on L_d
/// keeps the score independent of the coefficients being searched.
TuneResult tune_coefficients(const QuoteDataset& data, std::span<const double> v_e_ref,
                             const std::function<PinnModel()>& model_factory, const TrainConfig& base,
                             const TuneConfig& cfg);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);
void write_tuning_csv(std::ostream& out, const std::vector<TuneTrial>& log);

}  // namespace jdpinn
