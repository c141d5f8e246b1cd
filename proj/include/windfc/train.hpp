#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "windfc/model.hpp"
#include "windfc/preprocess.hpp"

namespace windfc {

/// Optimizer and loop settings; defaults reproduce the competition run
/// (batch 1024, 3 epochs, Adam at 0.005).
struct TrainConfig {
  std::size_t batch_size = 1024;
  std::size_t epochs = 3;
  double learning_rate = 0.005;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t shuffle_seed = 42;
  std::uint64_t init_seed = 2022;
  std::uint64_t dropout_seed = 7;
  bool mask_invalid_targets = true;
  double loss_eps = 1e-8;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

template <typename T>
struct AdamState {
  std::vector<ad::Tensor<T>> m;
  std::vector<ad::Tensor<T>> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ForecasterParams<T>& params);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update. `grads` is aligned with params.entries.
template <typename T>
void adam_step(ForecasterParams<T>& params, const std::vector<ad::Tensor<T>>& grads, AdamState<T>& state,
               const TrainConfig& config);

/// Where training samples come from. `inputs` is the filled and scaled
/// series; `targets` provides raw target power and its validity mask.
struct TrainingData {
  const TurbineSeriesSet* inputs = nullptr;
  const TurbineSeriesSet* targets = nullptr;
  StepRange range;
  WindowSpec window;
  std::vector<std::string> feature_roles = default_feature_roles();
};

struct BatchProgress {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::size_t batches_per_epoch = 0;
  double loss = 0.0;
};

template <typename T>
struct FitResult {
  ForecasterParams<T> params;
  AdamState<T> adam;
  std::vector<double> epoch_loss;   // mean batch loss per epoch
  std::size_t skipped_batches = 0;  // batches with no valid target
  std::size_t optimizer_steps = 0;
};

/// Mini-batch Adam on the pooled windows of every turbine. Batch order is
/// reshuffled each epoch with shuffle_seed + epoch; the last partial batch
/// is kept. Starts from `initial` when given, else init_params(init_seed).
template <typename T>
FitResult<T> fit(const TrainingData& data, const ForecasterConfig& model_config, const TrainConfig& config,
                 const ForecasterParams<T>* initial = nullptr,
                 const std::function<void(const BatchProgress&)>& on_batch = {});

/// Masked RMSE of the model on a batch (eval mode, no dropout).
template <typename T>
double batch_loss(const ForecasterParams<T>& params, const ForecasterConfig& config, const WindowBatch& batch,
                  double loss_eps = 1e-8);

template <typename T>
ad::Tensor<T> batch_inputs(const WindowBatch& batch);

template <typename T>
struct Checkpoint {
  ForecasterConfig model;
  TrainConfig train;
  ForecasterParams<T> params;
  AdamState<T> adam;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: "WINDFCKP", u32 version, u32 scalar width, u64 length +
/// JSON config text, u32 record count, then per record u32 name length,
/// name, u32 rank, u64 dims, little-endian payload.
template <typename T>
void save_checkpoint(const std::string& path, const Checkpoint<T>& checkpoint);
template <typename T>
std::string checkpoint_bytes(const Checkpoint<T>& checkpoint);

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path);
template <typename T>
Checkpoint<T> parse_checkpoint(const std::string& bytes);

}  // namespace windfc
