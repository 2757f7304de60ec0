#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gridcast/convlstm.hpp"
#include "gridcast/datapipe.hpp"
#include "gridcast/tensor.hpp"

namespace gridcast {

// Mean squared error over every cell of every sample.
double mse_loss(const std::vector<Grid3>& predicted,
                const std::vector<Grid3>& observed);

struct LossGradients {
  double loss = 0.0;
  NetworkParams grads;  // dLoss/dtheta, averaged over the batch
};

// Traced forward pass plus full backpropagation through time across both
// layers and the head.
LossGradients loss_and_gradients(const NetworkSpec& spec,
                                 const NetworkParams& params, const SeqBatch& x,
                                 const std::vector<Grid3>& y);

struct GradCheckResult {
  std::size_t params_checked = 0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central-difference check of every parameter against the analytic gradient.
// Relative error is |analytic - numeric| / max(1, |numeric|).
GradCheckResult grad_check(const NetworkSpec& spec,
                           const NetworkParams& params, const SeqBatch& x,
                           const std::vector<Grid3>& y, double epsilon = 1e-5);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators, one slot per tensor in tensor_refs order.
struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState make_adam_state(NetworkParams& params);
void adam_step(NetworkParams& params, NetworkParams& grads, AdamState& state,
               const AdamConfig& cfg);

// Scales gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping. max_norm <= 0 leaves them untouched.
double clip_gradients(NetworkParams& grads, double max_norm);

struct TrainConfig {
  AdamConfig adam;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;       // epochs without improvement before stopping
  double clip_norm = 0.0;  // 0 disables clipping
  std::uint64_t shuffle_seed = 0;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;  // train loss stands in when validation is empty
  double seconds = 0.0;   // wall time; excluded from deterministic artifacts
  bool improved = false;
};

struct TrainResult {
  NetworkParams best_params;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  bool diverged = false;
  std::string stop_reason;  // "early_stop", "max_epochs", or "diverged"
  std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Mini-batch Adam with a seeded shuffle, early stopping on validation loss,
// and a clean abort that keeps the last finite parameters if the loss ever
// goes non-finite. Byte-identical runs for identical inputs and seeds.
TrainResult train(const NetworkSpec& spec, const NetworkParams& initial,
                  const WindowSet& train_set, const WindowSet& val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct PredictionSet {
  std::vector<Grid3> predicted;  // one (1, grid) field per sample
  std::vector<Grid3> observed;
};

// Forward pass over a whole window set in fixed-size batches, in sample
// order.
PredictionSet predict_all(const NetworkSpec& spec, const NetworkParams& params,
                          const WindowSet& set, int batch_size = 32);

// Smallest |argument| the cell activation would see anywhere in a forward
// pass over this batch, ignoring cell states pinned at exactly zero (those
// are stable under small parameter nudges). Relu has a gradient kink at
// zero, so finite differences are only trustworthy when this margin
// comfortably exceeds the probe step.
double kink_margin(const NetworkSpec& spec, const NetworkParams& params,
                   const SeqBatch& x);

}  // namespace gridcast
