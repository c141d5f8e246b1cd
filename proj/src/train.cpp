#include "windfc/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "windfc/serialize.hpp"

namespace windfc {

using ad::Tensor;

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::ConfigError, "train.batch_size must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::ConfigError, "train.epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::ConfigError, "train.learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error(ErrorCode::ConfigError, "adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0) || !(loss_eps >= 0.0)) throw Error(ErrorCode::ConfigError, "eps values must be positive");
}

template <typename T>
AdamState<T> AdamState<T>::zeros_like(const ForecasterParams<T>& params) {
  AdamState<T> s;
  for (const auto& e : params.entries) {
    s.m.emplace_back(e.tensor.shape());
    s.v.emplace_back(e.tensor.shape());
  }
  return s;
}

template <typename T>
void adam_step(ForecasterParams<T>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               const TrainConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam_step: gradient/state count differs from parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& shape = params.entries[i].tensor.shape();
    if (grads[i].shape() != shape || state.m[i].shape() != shape || state.v[i].shape() != shape) {
      throw Error(ErrorCode::ShapeMismatch, "adam_step: " + params.entries[i].name);
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(config.adam_beta1);
  const T b2 = static_cast<T>(config.adam_beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(config.adam_beta1, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(config.adam_beta2, t)));
  const T lr = static_cast<T>(config.learning_rate);
  const T eps = static_cast<T>(config.adam_eps);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params.entries[i].tensor.data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const T m_hat = m[j] * c1;
      const T v_hat = v[j] * c2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <typename T>
Tensor<T> batch_inputs(const WindowBatch& batch) {
  std::vector<T> data(batch.inputs.begin(), batch.inputs.end());
  return Tensor<T>({batch.batch, batch.input_length, batch.n_features}, std::move(data));
}

namespace {

template <typename T>
Tensor<T> batch_targets(const WindowBatch& batch) {
  std::vector<T> data(batch.targets.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    // Masked positions may hold NaN; they never reach the loss.
    data[i] = batch.target_valid[i] ? static_cast<T>(batch.targets[i]) : T(0);
  }
  return Tensor<T>({batch.batch, batch.output_length}, std::move(data));
}

}  // namespace

template <typename T>
double batch_loss(const ForecasterParams<T>& params, const ForecasterConfig& config, const WindowBatch& batch,
                  double loss_eps) {
  ad::Tape<T> tape;
  auto bound = bind_params(tape, params, false);
  std::mt19937_64 unused(0);
  auto pred = forward(bound, config, tape.constant(batch_inputs<T>(batch)), false, unused);
  return static_cast<double>(
      ad::rmse_loss(pred, batch_targets<T>(batch), batch.target_valid, static_cast<T>(loss_eps)).value().item());
}

template <typename T>
FitResult<T> fit(const TrainingData& data, const ForecasterConfig& model_config, const TrainConfig& config,
                 const ForecasterParams<T>* initial, const std::function<void(const BatchProgress&)>& on_batch) {
  config.validate();
  model_config.validate();
  if (!data.inputs || !data.targets) throw Error(ErrorCode::InvalidArgument, "training data not set");
  if (data.window.input_length != model_config.input_length ||
      data.window.output_length != model_config.output_length ||
      data.feature_roles.size() != model_config.n_features) {
    throw Error(ErrorCode::ShapeMismatch, "window/feature layout does not match the model config");
  }

  std::vector<WindowRef> refs;
  try {
    refs = enumerate_windows(*data.inputs, data.window, data.range);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RangeTooShort) throw Error(ErrorCode::NoTrainingData, e.what());
    throw;
  }
  // Without masking, targets come from the filled series so every position is usable.
  const TurbineSeriesSet& target_source = config.mask_invalid_targets ? *data.targets : *data.inputs;

  FitResult<T> result;
  result.params = initial ? *initial : init_params<T>(model_config, config.init_seed);
  result.adam = AdamState<T>::zeros_like(result.params);
  std::mt19937_64 dropout_rng(config.dropout_seed);

  std::vector<std::size_t> order(refs.size());
  const std::size_t n_batches = (refs.size() + config.batch_size - 1) / config.batch_size;
  std::vector<WindowRef> batch_refs;
  batch_refs.reserve(config.batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(config.shuffle_seed + epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      batch_refs.clear();
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(refs.size(), lo + config.batch_size);
      for (std::size_t i = lo; i < hi; ++i) batch_refs.push_back(refs[order[i]]);
      WindowBatch batch = gather_windows(*data.inputs, target_source, batch_refs, data.window, data.feature_roles);
      if (!config.mask_invalid_targets) std::fill(batch.target_valid.begin(), batch.target_valid.end(), 1);
      if (std::none_of(batch.target_valid.begin(), batch.target_valid.end(), [](auto v) { return v != 0; })) {
        ++result.skipped_batches;
        continue;
      }

      ad::Tape<T> tape;
      auto bound = bind_params(tape, result.params, true);
      auto pred = forward(bound, model_config, tape.constant(batch_inputs<T>(batch)), true, dropout_rng);
      auto loss = ad::rmse_loss(pred, batch_targets<T>(batch), batch.target_valid, static_cast<T>(config.loss_eps));
      const double loss_value = static_cast<double>(loss.value().item());
      if (!std::isfinite(loss_value)) {
        throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                                                  ", optimizer step " + std::to_string(result.optimizer_steps + 1));
      }
      auto grads = tape.backward(loss);
      std::vector<Tensor<T>> grad_list;
      grad_list.reserve(bound.vars.size());
      for (const auto& v : bound.vars) grad_list.push_back(grads.at(v));
      adam_step(result.params, grad_list, result.adam, config);
      ++result.optimizer_steps;

      loss_sum += loss_value;
      ++loss_count;
      if (on_batch) on_batch({epoch, b, n_batches, loss_value});
    }
    if (loss_count == 0) throw Error(ErrorCode::NoTrainingData, "every batch in epoch " + std::to_string(epoch) +
                                                                   " had an empty target mask");
    result.epoch_loss.push_back(loss_sum / static_cast<double>(loss_count));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'W', 'I', 'N', 'D', 'F', 'C', 'K', 'P'};

template <typename U>
void put(std::string& out, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  unsigned char bytes[sizeof(U)];
  std::memcpy(bytes, &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(U));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    if (pos_ + sizeof(U) > bytes_.size()) throw Error(ErrorCode::CorruptCheckpoint, std::string("truncated at ") + what);
    unsigned char raw[sizeof(U)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(U));
    pos_ += sizeof(U);
    U value;
    std::memcpy(&value, raw, sizeof(U));
    return value;
  }

  std::string take(std::size_t n, const char* what) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::CorruptCheckpoint, std::string("truncated at ") + what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void put_record(std::string& out, const std::string& name, const Tensor<T>& t) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
  for (T v : t.data()) put<T>(out, v);
}

}  // namespace

template <typename T>
std::string checkpoint_bytes(const Checkpoint<T>& ck) {
  if (ck.adam.m.size() != ck.params.size() || ck.adam.v.size() != ck.params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam state does not match parameters");
  }
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, sizeof(T));
  nlohmann::json meta;
  meta["model"] = ck.model;
  meta["train"] = ck.train;
  meta["adam_step"] = ck.adam.step;
  const std::string text = meta.dump();
  put<std::uint64_t>(out, text.size());
  out += text;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(3 * ck.params.size()));
  for (const auto& e : ck.params.entries) put_record(out, e.name, e.tensor);
  for (std::size_t i = 0; i < ck.params.size(); ++i) put_record(out, "adam.m/" + ck.params.entries[i].name, ck.adam.m[i]);
  for (std::size_t i = 0; i < ck.params.size(); ++i) put_record(out, "adam.v/" + ck.params.entries[i].name, ck.adam.v[i]);
  return out;
}

template <typename T>
void save_checkpoint(const std::string& path, const Checkpoint<T>& ck) {
  const std::string bytes = checkpoint_bytes(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

template <typename T>
Checkpoint<T> parse_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(sizeof kMagic, "magic") != std::string(kMagic, sizeof kMagic)) {
    throw Error(ErrorCode::CorruptCheckpoint, "bad magic");
  }
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                                std::to_string(kCheckpointVersion));
  }
  const auto width = in.get<std::uint32_t>("scalar width");
  if (width != sizeof(T)) throw Error(ErrorCode::CorruptCheckpoint, "scalar width " + std::to_string(width));

  Checkpoint<T> ck;
  const auto meta_len = in.get<std::uint64_t>("config length");
  if (meta_len > bytes.size()) throw Error(ErrorCode::CorruptCheckpoint, "config length");
  try {
    const auto meta = nlohmann::json::parse(in.take(static_cast<std::size_t>(meta_len), "config"));
    ck.model = meta.at("model").get<ForecasterConfig>();
    ck.train = meta.at("train").get<TrainConfig>();
    ck.adam.step = meta.at("adam_step").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("config: ") + e.what());
  }

  const auto layout = param_layout(ck.model);
  const auto n_records = in.get<std::uint32_t>("record count");
  if (n_records != 3 * layout.size()) throw Error(ErrorCode::CorruptCheckpoint, "record count");

  auto read_record = [&](const std::string& expected_name, const ad::Shape& expected_shape) {
    const auto name_len = in.get<std::uint32_t>("name length");
    if (name_len > 4096) throw Error(ErrorCode::CorruptCheckpoint, "name length");
    const std::string name = in.take(name_len, "name");
    if (name != expected_name) throw Error(ErrorCode::CorruptCheckpoint, "expected " + expected_name + ", got " + name);
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank != expected_shape.size()) throw Error(ErrorCode::CorruptCheckpoint, "rank of " + name);
    ad::Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>("dim"));
    if (shape != expected_shape) {
      throw Error(ErrorCode::CorruptCheckpoint, "shape of " + name + " is " + ad::shape_string(shape) + ", expected " +
                                                    ad::shape_string(expected_shape));
    }
    std::vector<T> data(ad::element_count(shape));
    for (T& v : data) v = in.get<T>("payload");
    return Tensor<T>(shape, std::move(data));
  };

  for (const auto& [name, shape] : layout) ck.params.entries.push_back({name, read_record(name, shape)});
  for (const auto& [name, shape] : layout) ck.adam.m.push_back(read_record("adam.m/" + name, shape));
  for (const auto& [name, shape] : layout) ck.adam.v.push_back(read_record("adam.v/" + name, shape));
  if (!in.done()) throw Error(ErrorCode::CorruptCheckpoint, "trailing bytes");
  return ck;
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint<T>(buffer.str());
}

#define WINDFC_INSTANTIATE_TRAIN(T)                                                                          \
  template struct AdamState<T>;                                                                              \
  template void adam_step(ForecasterParams<T>&, const std::vector<Tensor<T>>&, AdamState<T>&,                \
                          const TrainConfig&);                                                               \
  template Tensor<T> batch_inputs<T>(const WindowBatch&);                                                    \
  template double batch_loss(const ForecasterParams<T>&, const ForecasterConfig&, const WindowBatch&, double); \
  template FitResult<T> fit(const TrainingData&, const ForecasterConfig&, const TrainConfig&,                 \
                            const ForecasterParams<T>*, const std::function<void(const BatchProgress&)>&);   \
  template std::string checkpoint_bytes(const Checkpoint<T>&);                                               \
  template void save_checkpoint(const std::string&, const Checkpoint<T>&);                                   \
  template Checkpoint<T> parse_checkpoint<T>(const std::string&);                                            \
  template Checkpoint<T> load_checkpoint<T>(const std::string&);

WINDFC_INSTANTIATE_TRAIN(float)
WINDFC_INSTANTIATE_TRAIN(double)

#undef WINDFC_INSTANTIATE_TRAIN

}  // namespace windfc
