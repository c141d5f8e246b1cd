#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "windfc/autodiff/ops.hpp"

namespace windfc {

enum class Activation { Relu, Identity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// Encoder forecaster hyper-parameters. Defaults are the competition model:
/// one single-head encoder layer of width 32 and a 512/1024/288 dense head.
struct ForecasterConfig {
  std::size_t input_length = 288;
  std::size_t output_length = 288;
  std::size_t n_features = 2;
  std::size_t n_encoder_layers = 1;
  std::size_t attn_hidden = 32;
  std::size_t n_heads = 1;
  double attn_dropout = 0.0;
  std::size_t ffn_hidden = 32;
  double ffn_dropout = 0.0;
  std::size_t dense1 = 512;
  double dense1_dropout = 0.25;
  std::size_t dense2 = 1024;
  double dense2_dropout = 0.25;
  std::size_t dense3 = 288;
  double layer_norm_eps = 1e-5;
  Activation activation = Activation::Relu;

  void validate() const;
  friend bool operator==(const ForecasterConfig&, const ForecasterConfig&) = default;
};

template <typename T>
struct NamedTensor {
  std::string name;
  ad::Tensor<T> tensor;
};

/// All learnable tensors in a fixed order, addressable by name.
template <typename T>
struct ForecasterParams {
  std::vector<NamedTensor<T>> entries;

  ad::Tensor<T>& at(const std::string& name);
  const ad::Tensor<T>& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return entries.size(); }
  std::size_t element_count() const;

  template <typename U>
  ForecasterParams<U> cast() const {
    ForecasterParams<U> out;
    for (const auto& e : entries) out.entries.push_back({e.name, e.tensor.template cast<U>()});
    return out;
  }

  friend bool operator==(const ForecasterParams& a, const ForecasterParams& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      if (a.entries[i].name != b.entries[i].name || !(a.entries[i].tensor == b.entries[i].tensor)) return false;
    }
    return true;
  }
};

/// Tensor names and shapes in declaration order.
std::vector<std::pair<std::string, ad::Shape>> param_layout(const ForecasterConfig& config);

/// Closed-form number of learnable scalars.
std::size_t param_count(const ForecasterConfig& config);

/// Glorot-uniform weights (+-sqrt(6 / (fan_in + fan_out))), zero biases,
/// unit layer-norm gain and zero shift.
template <typename T>
ForecasterParams<T> init_params(const ForecasterConfig& config, std::uint64_t seed);

/// Parameters recorded on a tape as leaves.
template <typename T>
struct BoundParams {
  std::vector<std::string> names;
  std::vector<ad::Var<T>> vars;

  const ad::Var<T>& operator[](const std::string& name) const;
};

template <typename T>
BoundParams<T> bind_params(ad::Tape<T>& tape, const ForecasterParams<T>& params, bool requires_grad = true);

/// Embedding plus encoder stack: [batch, input_length, n_features] ->
/// [batch, input_length, attn_hidden]. No positional information is added.
template <typename T>
ad::Var<T> encode(const BoundParams<T>& params, const ForecasterConfig& config, const ad::Var<T>& inputs,
                  bool training, std::mt19937_64& rng);

/// Full model: [batch, input_length, n_features] -> [batch, output_length] in kW.
template <typename T>
ad::Var<T> forward(const BoundParams<T>& params, const ForecasterConfig& config, const ad::Var<T>& inputs,
                   bool training, std::mt19937_64& rng);

/// Eval-mode forward without gradient bookkeeping.
template <typename T>
ad::Tensor<T> predict(const ForecasterParams<T>& params, const ForecasterConfig& config, const ad::Tensor<T>& inputs);

}  // namespace windfc
