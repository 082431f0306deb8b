#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sedenet/data.hpp"
#include "sedenet/model.hpp"
#include "sedenet/tensor.hpp"

namespace sedenet {

struct TrainConfig {
  double lr_init = 1e-4;
  double lr_floor = 1e-6;
  double lr_factor = 0.1;
  size_t plateau_patience = 5;
  double plateau_min_delta = 1e-3;
  size_t batch_size = 4;
  size_t max_epochs = 50;
  uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void validate_config(const TrainConfig& cfg);

struct MseResult {
  double value = 0.0;
  Tensor grad;  // 2*(pred-target)/count
};

/// Mean over all elements of (pred-target)^2, accumulated in f64.
MseResult mse_loss(const Tensor& pred, const Tensor& target);

/// Bias-corrected Adam over a fixed parameter list. Moment buffers are
/// created on the first step and addressed by parameter order.
class Adam {
 public:
  Adam(double beta1, double beta2, double eps);

  /// Throws std::runtime_error naming the parameter on non-finite gradients.
  void step(const std::vector<ParamRef>& params, double lr);

  uint64_t step_count() const { return step_; }
  void set_step_count(uint64_t s) { step_ = s; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }

 private:
  double beta1_, beta2_, eps_;
  uint64_t step_ = 0;
  std::vector<Tensor> m_, v_;
};

/// Reduce-on-plateau: cut lr by lr_factor (never below lr_floor) after
/// plateau_patience consecutive epochs without a relative improvement of
/// more than plateau_min_delta over the best seen value.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(const TrainConfig& cfg);

  double observe(double val_loss);  // returns the lr for the next epoch
  double lr() const { return lr_; }

  double best() const { return best_; }
  size_t bad_epochs() const { return bad_epochs_; }
  void restore(double lr, double best, size_t bad_epochs);

 private:
  TrainConfig cfg_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  size_t bad_epochs_ = 0;
};

/// Replays the rule over a validation-loss history starting at current_lr.
double plateau_schedule(const std::vector<double>& history, double current_lr,
                        const TrainConfig& cfg);

// ---- evaluation ----

/// (day index, window start) pairs addressing one city's day files.
using WindowRef = std::pair<size_t, size_t>;

struct SplitPlan {
  std::vector<WindowRef> train;
  std::vector<WindowRef> val;
};

/// Builds the plan from the manifest split; caps pick evenly spaced windows
/// when nonzero.
SplitPlan make_split_plan(const Dataset& data, size_t max_train_windows = 0,
                          size_t max_val_windows = 0);

struct EvalResult {
  std::array<double, 6> per_horizon{};
  double overall = 0.0;
  size_t windows = 0;
};

/// Eval-mode per-horizon MSE averaged over the given windows.
EvalResult evaluate(SedUNet& model, const Dataset& data,
                    const std::vector<WindowRef>& windows, size_t batch_size);

/// Repeats the last input frame's first 8 channels at every horizon.
Tensor persistence_prediction(const Sample& sample);

/// MSE of the persistence baseline over the given windows.
EvalResult evaluate_persistence(const Dataset& data,
                                const std::vector<WindowRef>& windows);

// ---- checkpoints ----

struct CheckpointMeta {
  ModelConfig model;
  TrainConfig train;
  size_t epoch = 0;
  double lr = 0.0;
  uint64_t adam_step = 0;
  std::array<uint64_t, 4> rng_state{};
  std::vector<double> val_history;
  double best_val = std::numeric_limits<double>::infinity();
  size_t best_epoch = 0;
  double plateau_best = std::numeric_limits<double>::infinity();
  size_t plateau_bad_epochs = 0;
};

struct Checkpoint {
  CheckpointMeta meta;
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Captures parameters, batchnorm running stats and Adam moments.
Checkpoint make_checkpoint(SedUNet& model, Adam& opt, const CheckpointMeta& meta);

/// Restores parameters and running stats; throws listing any missing name.
void restore_model(SedUNet& model, const Checkpoint& ckpt);

/// Restores moment buffers and the step counter.
void restore_adam(Adam& opt, SedUNet& model, const Checkpoint& ckpt);

// ---- training loop ----

struct MetricsRow {
  size_t epoch = 0;
  double lr = 0.0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double val_mse_u8 = 0.0;
  std::array<double, 6> horizons{};
  double seconds = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

struct FitResult {
  std::vector<MetricsRow> rows;
  double best_val = std::numeric_limits<double>::infinity();
  size_t best_epoch = 0;
  size_t steps = 0;
  std::string best_checkpoint;
  std::string last_checkpoint;
  std::string csv_path;
};

/// Epoch loop: seeded shuffle, minibatch forward/backward/Adam, per-epoch
/// validation, plateau schedule, CSV row, best-by-val checkpointing.
/// Passing `resume` continues a run saved by an earlier fit.
FitResult fit(SedUNet& model, const Dataset& data, const SplitPlan& plan,
              const TrainConfig& cfg, const std::string& out_dir,
              const Checkpoint* resume = nullptr,
              const std::function<void(const MetricsRow&)>& on_epoch = {});

}  // namespace sedenet
