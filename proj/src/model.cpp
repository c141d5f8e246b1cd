#include "windfc/model.hpp"

#include <algorithm>
#include <cmath>

namespace windfc {

using ad::Shape;
using ad::Tensor;
using ad::Var;

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "relu";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + name + "'");
}

void ForecasterConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be positive");
  };
  positive(input_length, "input_length");
  positive(output_length, "output_length");
  positive(n_features, "n_features");
  positive(n_encoder_layers, "n_encoder_layers");
  positive(attn_hidden, "attn_hidden");
  positive(n_heads, "n_heads");
  positive(ffn_hidden, "ffn_hidden");
  positive(dense1, "dense1");
  positive(dense2, "dense2");
  positive(dense3, "dense3");
  if (attn_hidden % n_heads != 0) throw Error(ErrorCode::InvalidArgument, "attn_hidden must be divisible by n_heads");
  if (dense3 != output_length) throw Error(ErrorCode::InvalidArgument, "dense3 must equal output_length");
  for (double rate : {attn_dropout, ffn_dropout, dense1_dropout, dense2_dropout}) {
    if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::InvalidArgument, "dropout rates must be in [0, 1)");
  }
  if (!(layer_norm_eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "layer_norm_eps must be positive");
}

namespace {

std::string layer_prefix(std::size_t layer) { return layer == 0 ? "" : "enc" + std::to_string(layer) + "."; }

}  // namespace

std::vector<std::pair<std::string, Shape>> param_layout(const ForecasterConfig& c) {
  c.validate();
  std::vector<std::pair<std::string, Shape>> out;
  const std::size_t d = c.attn_hidden;
  out.push_back({"embed.w", {c.n_features, d}});
  out.push_back({"embed.b", {d}});
  for (std::size_t l = 0; l < c.n_encoder_layers; ++l) {
    const std::string p = layer_prefix(l);
    for (const char* m : {"q", "k", "v", "o"}) {
      out.push_back({p + "attn.w" + m, {d, d}});
      out.push_back({p + "attn.b" + m, {d}});
    }
    out.push_back({p + "ln1.gamma", {d}});
    out.push_back({p + "ln1.beta", {d}});
    out.push_back({p + "ffn.w1", {d, c.ffn_hidden}});
    out.push_back({p + "ffn.b1", {c.ffn_hidden}});
    out.push_back({p + "ffn.w2", {c.ffn_hidden, d}});
    out.push_back({p + "ffn.b2", {d}});
    out.push_back({p + "ln2.gamma", {d}});
    out.push_back({p + "ln2.beta", {d}});
  }
  out.push_back({"head.w1", {c.input_length * d, c.dense1}});
  out.push_back({"head.b1", {c.dense1}});
  out.push_back({"head.w2", {c.dense1, c.dense2}});
  out.push_back({"head.b2", {c.dense2}});
  out.push_back({"head.w3", {c.dense2, c.dense3}});
  out.push_back({"head.b3", {c.dense3}});
  return out;
}

std::size_t param_count(const ForecasterConfig& c) {
  c.validate();
  const std::size_t d = c.attn_hidden;
  const std::size_t embed = c.n_features * d + d;
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t norms = 4 * d;
  const std::size_t ffn = d * c.ffn_hidden + c.ffn_hidden + c.ffn_hidden * d + d;
  const std::size_t head = c.input_length * d * c.dense1 + c.dense1 + c.dense1 * c.dense2 + c.dense2 +
                           c.dense2 * c.dense3 + c.dense3;
  return embed + c.n_encoder_layers * (attention + norms + ffn) + head;
}

template <typename T>
Tensor<T>& ForecasterParams<T>::at(const std::string& name) {
  for (auto& e : entries) {
    if (e.name == name) return e.tensor;
  }
  throw Error(ErrorCode::InvalidArgument, "no parameter named " + name);
}

template <typename T>
const Tensor<T>& ForecasterParams<T>::at(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e.tensor;
  }
  throw Error(ErrorCode::InvalidArgument, "no parameter named " + name);
}

template <typename T>
bool ForecasterParams<T>::contains(const std::string& name) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
}

template <typename T>
std::size_t ForecasterParams<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.tensor.size();
  return n;
}

template <typename T>
ForecasterParams<T> init_params(const ForecasterConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ForecasterParams<T> params;
  for (auto& [name, shape] : param_layout(config)) {
    Tensor<T> t(shape);
    const bool is_gain = name.ends_with(".gamma");
    if (shape.size() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (T& v : t.data()) v = static_cast<T>(dist(rng));
    } else if (is_gain) {
      std::fill(t.data().begin(), t.data().end(), T(1));
    }
    params.entries.push_back({name, std::move(t)});
  }
  return params;
}

template <typename T>
const Var<T>& BoundParams<T>::operator[](const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return vars[i];
  }
  throw Error(ErrorCode::InvalidArgument, "no parameter named " + name);
}

template <typename T>
BoundParams<T> bind_params(ad::Tape<T>& tape, const ForecasterParams<T>& params, bool requires_grad) {
  BoundParams<T> bound;
  for (const auto& e : params.entries) {
    bound.names.push_back(e.name);
    bound.vars.push_back(tape.leaf(e.tensor, requires_grad));
  }
  return bound;
}

namespace {

template <typename T>
Var<T> activate(const Var<T>& x, Activation a) {
  return a == Activation::Relu ? ad::relu(x) : x;
}

template <typename T>
Var<T> self_attention(const BoundParams<T>& p, const std::string& prefix, const ForecasterConfig& c,
                      const Var<T>& x) {
  const std::size_t batch = x.shape()[0];
  const std::size_t steps = x.shape()[1];
  const std::size_t heads = c.n_heads;
  const std::size_t head_dim = c.attn_hidden / heads;

  auto split = [&](const Var<T>& t) {
    return ad::swap_axes12(ad::reshape(t, {batch, steps, heads, head_dim}));  // [B, H, T, dh]
  };
  Var<T> q = split(ad::affine(x, p[prefix + "attn.wq"], p[prefix + "attn.bq"]));
  Var<T> k = split(ad::affine(x, p[prefix + "attn.wk"], p[prefix + "attn.bk"]));
  Var<T> v = split(ad::affine(x, p[prefix + "attn.wv"], p[prefix + "attn.bv"]));

  Var<T> scores = ad::scale(ad::batch_matmul(q, k, true), T(1) / std::sqrt(static_cast<T>(head_dim)));
  Var<T> weights = ad::softmax_lastaxis(scores);
  Var<T> context = ad::batch_matmul(weights, v);  // [B, H, T, dh]
  Var<T> merged = ad::reshape(ad::swap_axes12(context), {batch, steps, c.attn_hidden});
  return ad::affine(merged, p[prefix + "attn.wo"], p[prefix + "attn.bo"]);
}

}  // namespace

template <typename T>
Var<T> encode(const BoundParams<T>& p, const ForecasterConfig& c, const Var<T>& inputs, bool training,
              std::mt19937_64& rng) {
  const auto& shape = inputs.shape();
  if (shape.size() != 3 || shape[1] != c.input_length || shape[2] != c.n_features) {
    throw Error(ErrorCode::ShapeMismatch, "forecaster input " + ad::shape_string(shape) + ", expected [batch, " +
                                              std::to_string(c.input_length) + ", " + std::to_string(c.n_features) +
                                              "]");
  }
  for (T v : inputs.value().data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "forecaster input");
  }
  const T eps = static_cast<T>(c.layer_norm_eps);

  Var<T> h = ad::affine(inputs, p["embed.w"], p["embed.b"]);
  for (std::size_t l = 0; l < c.n_encoder_layers; ++l) {
    const std::string pre = layer_prefix(l);
    Var<T> attn = ad::dropout(self_attention(p, pre, c, h), static_cast<T>(c.attn_dropout), training, rng);
    h = ad::layer_norm(ad::add(h, attn), p[pre + "ln1.gamma"], p[pre + "ln1.beta"], eps);

    Var<T> ff = ad::affine(activate(ad::affine(h, p[pre + "ffn.w1"], p[pre + "ffn.b1"]), c.activation),
                           p[pre + "ffn.w2"], p[pre + "ffn.b2"]);
    ff = ad::dropout(ff, static_cast<T>(c.ffn_dropout), training, rng);
    h = ad::layer_norm(ad::add(h, ff), p[pre + "ln2.gamma"], p[pre + "ln2.beta"], eps);
  }
  return h;
}

template <typename T>
Var<T> forward(const BoundParams<T>& p, const ForecasterConfig& c, const Var<T>& inputs, bool training,
               std::mt19937_64& rng) {
  Var<T> h = encode(p, c, inputs, training, rng);
  const std::size_t batch = h.shape()[0];
  Var<T> flat = ad::reshape(h, {batch, c.input_length * c.attn_hidden});

  Var<T> d1 = activate(ad::affine(flat, p["head.w1"], p["head.b1"]), c.activation);
  d1 = ad::dropout(d1, static_cast<T>(c.dense1_dropout), training, rng);
  Var<T> d2 = activate(ad::affine(d1, p["head.w2"], p["head.b2"]), c.activation);
  d2 = ad::dropout(d2, static_cast<T>(c.dense2_dropout), training, rng);
  return ad::affine(d2, p["head.w3"], p["head.b3"]);
}

template <typename T>
Tensor<T> predict(const ForecasterParams<T>& params, const ForecasterConfig& config, const Tensor<T>& inputs) {
  ad::Tape<T> tape;
  auto bound = bind_params(tape, params, false);
  std::mt19937_64 unused(0);
  return forward(bound, config, tape.constant(inputs), false, unused).value();
}

#define WINDFC_INSTANTIATE_MODEL(T)                                                                        \
  template struct ForecasterParams<T>;                                                                     \
  template struct BoundParams<T>;                                                                          \
  template ForecasterParams<T> init_params<T>(const ForecasterConfig&, std::uint64_t);                    \
  template BoundParams<T> bind_params(ad::Tape<T>&, const ForecasterParams<T>&, bool);                    \
  template Var<T> encode(const BoundParams<T>&, const ForecasterConfig&, const Var<T>&, bool,             \
                         std::mt19937_64&);                                                                \
  template Var<T> forward(const BoundParams<T>&, const ForecasterConfig&, const Var<T>&, bool,            \
                          std::mt19937_64&);                                                               \
  template Tensor<T> predict(const ForecasterParams<T>&, const ForecasterConfig&, const Tensor<T>&);

WINDFC_INSTANTIATE_MODEL(float)
WINDFC_INSTANTIATE_MODEL(double)

#undef WINDFC_INSTANTIATE_MODEL

}  // namespace windfc
