#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "windfc/error.hpp"
#include "windfc/model.hpp"

using namespace windfc;

namespace {

ad::Tensor<double> random_input(std::size_t batch, const ForecasterConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ad::Tensor<double> x({batch, cfg.input_length, cfg.n_features});
  for (auto& v : x.data()) v = u(rng);
  return x;
}

ForecasterConfig small_config() {
  ForecasterConfig c;
  c.input_length = 12;
  c.output_length = 6;
  c.attn_hidden = 8;
  c.n_heads = 2;
  c.ffn_hidden = 8;
  c.dense1 = 16;
  c.dense2 = 16;
  c.dense3 = 6;
  return c;
}

}  // namespace

TEST_CASE("default configuration") {
  const ForecasterConfig c;
  CHECK(c.input_length == 288);
  CHECK(c.output_length == 288);
  CHECK(c.n_features == 2);
  CHECK(c.n_encoder_layers == 1);
  CHECK(c.attn_hidden == 32);
  CHECK(c.n_heads == 1);
  CHECK(c.attn_dropout == 0.0);
  CHECK(c.ffn_hidden == 32);
  CHECK(c.ffn_dropout == 0.0);
  CHECK(c.dense1 == 512);
  CHECK(c.dense1_dropout == 0.25);
  CHECK(c.dense2 == 1024);
  CHECK(c.dense2_dropout == 0.25);
  CHECK(c.dense3 == 288);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation") {
  ForecasterConfig c;
  c.n_heads = 5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ForecasterConfig{};
  c.dense3 = 100;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("parameter count") {
  const ForecasterConfig c;
  const auto layout = param_layout(c);
  std::size_t total = 0;
  for (const auto& [name, shape] : layout) total += ad::element_count(shape);
  CHECK(param_count(c) == total);
  CHECK(param_count(c) == 5546176);

  std::size_t embed = 0;
  for (const auto& [name, shape] : layout) {
    if (name.rfind("embed.", 0) == 0) embed += ad::element_count(shape);
  }
  CHECK(embed == 2 * 32 + 32);

  // head.w1 dominates: 288 * 32 inputs to 512 units
  auto it = std::find_if(layout.begin(), layout.end(), [](const auto& e) { return e.first == "head.w1"; });
  REQUIRE(it != layout.end());
  CHECK(it->second == ad::Shape{9216, 512});

  ForecasterConfig half = c;
  half.dense2 = c.dense2 / 2;
  CHECK(param_count(half) < param_count(c));

  ForecasterConfig two = small_config();
  two.n_encoder_layers = 2;
  std::size_t sum2 = 0;
  for (const auto& [name, shape] : param_layout(two)) sum2 += ad::element_count(shape);
  CHECK(param_count(two) == sum2);
}

TEST_CASE("initialization") {
  const ForecasterConfig c;
  const auto a = init_params<double>(c, 2022);
  const auto b = init_params<double>(c, 2022);
  CHECK(a == b);
  CHECK_FALSE(a == init_params<double>(c, 2023));
  CHECK(a.element_count() == param_count(c));

  for (const auto& e : a.entries) {
    const auto& t = e.tensor;
    if (e.name.find("gamma") != std::string::npos) {
      for (double v : t.data()) CHECK(v == 1.0);
    } else if (e.name.find("beta") != std::string::npos || t.rank() == 1) {
      for (double v : t.data()) CHECK(v == 0.0);
    } else if (t.size() >= 10000) {
      const double fan_in = static_cast<double>(t.dim(0));
      const double fan_out = static_cast<double>(t.dim(1));
      const double expected = 6.0 / (fan_in + fan_out) / 3.0;
      const double mean = std::accumulate(t.data().begin(), t.data().end(), 0.0) / static_cast<double>(t.size());
      double var = 0.0;
      for (double v : t.data()) var += (v - mean) * (v - mean);
      var /= static_cast<double>(t.size());
      CHECK(std::abs(var - expected) < 0.1 * expected);
    }
  }
}

TEST_CASE("forward shape and eval determinism at full size") {
  const ForecasterConfig c;
  const auto params = init_params<float>(c, 1);
  const auto x = random_input(4, c, 3).cast<float>();
  const auto y1 = predict(params, c, x);
  const auto y2 = predict(params, c, x);
  CHECK(y1.shape() == ad::Shape{4, 288});
  CHECK(y1 == y2);
  CHECK_THROWS_AS(predict(params, c, ad::Tensor<float>({4, 288, 3})), Error);
}

TEST_CASE("non-finite inputs are rejected") {
  const auto c = small_config();
  const auto params = init_params<double>(c, 1);
  auto x = random_input(1, c, 1);
  x[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    predict(params, c, x);
    FAIL("NaN accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
}

TEST_CASE("training mode draws dropout, eval mode does not") {
  const auto c = small_config();
  const auto params = init_params<double>(c, 4);
  const auto x = random_input(2, c, 5);
  ad::Tape<double> tape;
  const auto bound = bind_params(tape, params, false);
  std::mt19937_64 r1(1);
  std::mt19937_64 r2(2);
  const auto train_a = forward(bound, c, tape.constant(x), true, r1).value();
  const auto train_b = forward(bound, c, tape.constant(x), true, r2).value();
  const auto eval = forward(bound, c, tape.constant(x), false, r1).value();
  CHECK_FALSE(train_a == train_b);
  CHECK(eval == predict(params, c, x));
}

TEST_CASE("encoder is equivariant to time permutations") {
  for (std::size_t heads : {1u, 2u}) {
    ForecasterConfig c;
    c.n_heads = heads;
    const auto params = init_params<double>(c, 77);
    const std::size_t batch = 3;
    const auto x = random_input(batch, c, 78);

    std::vector<std::size_t> perm(c.input_length);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(79);
    std::shuffle(perm.begin(), perm.end(), rng);
    ad::Tensor<double> xp(x.shape());
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < c.input_length; ++t)
        for (std::size_t f = 0; f < c.n_features; ++f)
          xp[(b * c.input_length + t) * c.n_features + f] = x[(b * c.input_length + perm[t]) * c.n_features + f];

    ad::Tape<double> tape;
    const auto bound = bind_params(tape, params, false);
    std::mt19937_64 unused(0);
    const auto h = encode(bound, c, tape.constant(x), false, unused).value();
    const auto hp = encode(bound, c, tape.constant(xp), false, unused).value();
    const std::size_t d = c.attn_hidden;
    double max_diff = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < c.input_length; ++t)
        for (std::size_t k = 0; k < d; ++k)
          max_diff = std::max(max_diff, std::abs(hp[(b * c.input_length + t) * d + k] -
                                                 h[(b * c.input_length + perm[t]) * d + k]));
    CHECK(max_diff < 1e-5);
  }
}

TEST_CASE("parameter casting preserves names and shapes") {
  const auto c = small_config();
  const auto p = init_params<double>(c, 3);
  const auto f = p.cast<float>();
  REQUIRE(f.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(f.entries[i].name == p.entries[i].name);
    CHECK(f.entries[i].tensor.shape() == p.entries[i].tensor.shape());
  }
  CHECK(p.contains("head.w3"));
  CHECK_FALSE(p.contains("head.w4"));
}
