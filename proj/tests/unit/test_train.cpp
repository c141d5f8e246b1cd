#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "testutil.hpp"
#include "windfc/error.hpp"
#include "windfc/train.hpp"

using namespace windfc;

namespace {

ForecasterParams<double> scalar_params(double value) {
  ForecasterParams<double> p;
  p.entries.push_back({"w", ad::Tensor<double>({1}, value)});
  return p;
}

ForecasterConfig tiny_model() {
  ForecasterConfig c;
  c.input_length = 24;
  c.output_length = 12;
  c.attn_hidden = 8;
  c.ffn_hidden = 8;
  c.dense1 = 32;
  c.dense2 = 32;
  c.dense3 = 12;
  return c;
}

// Power is a noiseless saturating function of wind speed six steps earlier.
TurbineSeriesSet lagged_series() {
  auto wind = [](std::size_t t, std::size_t i) {
    const double x = static_cast<double>(i);
    return 8.0 + 3.0 * std::sin(x / 9.0 + static_cast<double>(t)) + 2.0 * std::sin(x / 31.0);
  };
  return testutil::make_series(2, 6, [&](std::size_t t, std::size_t r, std::size_t i) {
    if (r == 0) return 1500.0 / (1.0 + std::exp(-(wind(t, i >= 6 ? i - 6 : 0) - 8.0)));
    if (r == 1) return 180.0 + 10.0 * std::sin(static_cast<double>(i) / 50.0);
    return wind(t, i);
  });
}

struct Prepared {
  TurbineSeriesSet raw;
  TurbineSeriesSet inputs;
};

Prepared prepare(const TurbineSeriesSet& raw) {
  Prepared p{raw, {}};
  const auto filled = forward_fill(raw);
  p.inputs = transform(filled, fit_scaler(filled, default_feature_roles(), {0, raw.n_steps}));
  return p;
}

}  // namespace

TEST_CASE("train config defaults and validation") {
  const TrainConfig c;
  CHECK(c.batch_size == 1024);
  CHECK(c.epochs == 3);
  CHECK(c.learning_rate == 0.005);
  CHECK(c.adam_beta1 == 0.9);
  CHECK(c.adam_beta2 == 0.999);
  CHECK(c.adam_eps == 1e-8);
  TrainConfig bad;
  bad.epochs = 0;
  try {
    bad.validate();
    FAIL("epochs=0 accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
}

TEST_CASE("adam update formulas") {
  const TrainConfig cfg;
  SUBCASE("zero gradient leaves parameters unchanged") {
    auto p = scalar_params(0.3);
    auto s = AdamState<double>::zeros_like(p);
    adam_step(p, {ad::Tensor<double>({1}, 0.0)}, s, cfg);
    CHECK(p.entries[0].tensor[0] == 0.3);
    CHECK(s.step == 1);
  }
  SUBCASE("first step moves by lr / (1 + eps)") {
    auto p = scalar_params(0.0);
    auto s = AdamState<double>::zeros_like(p);
    adam_step(p, {ad::Tensor<double>({1}, 1.0)}, s, cfg);
    CHECK(p.entries[0].tensor[0] == doctest::Approx(-0.005 / (1.0 + 1e-8)).epsilon(1e-14));
    CHECK(p.entries[0].tensor[0] == doctest::Approx(-0.005));
  }
  SUBCASE("two steps differ from one step at double rate") {
    auto a = scalar_params(0.0);
    auto sa = AdamState<double>::zeros_like(a);
    const std::vector<ad::Tensor<double>> g{ad::Tensor<double>({1}, 0.7)};
    adam_step(a, g, sa, cfg);
    adam_step(a, g, sa, cfg);
    auto b = scalar_params(0.0);
    auto sb = AdamState<double>::zeros_like(b);
    TrainConfig doubled = cfg;
    doubled.learning_rate *= 2;
    adam_step(b, g, sb, doubled);
    CHECK(a.entries[0].tensor[0] != b.entries[0].tensor[0]);
  }
}

TEST_CASE("fit reduces loss on a learnable lagged signal") {
  const auto data = prepare(lagged_series());
  TrainingData td{&data.inputs, &data.raw, {0, data.raw.n_steps}, {24, 12, 4}, default_feature_roles()};
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.epochs = 3;
  cfg.learning_rate = 0.005;
  const auto r = fit<double>(td, tiny_model(), cfg);
  REQUIRE(r.epoch_loss.size() == 3);
  CHECK(r.epoch_loss[2] < r.epoch_loss[0]);
  const std::size_t windows = 2 * window_count(data.raw.n_steps, td.window);
  CHECK(r.optimizer_steps == 3 * ((windows + 31) / 32));
  CHECK(r.skipped_batches == 0);
}

TEST_CASE("fit is deterministic for fixed seeds") {
  const auto data = prepare(lagged_series());
  TrainingData td{&data.inputs, &data.raw, {0, 3 * 144}, {24, 12, 8}, default_feature_roles()};
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.epochs = 1;
  const auto a = fit<float>(td, tiny_model(), cfg);
  const auto b = fit<float>(td, tiny_model(), cfg);
  CHECK(a.params == b.params);
  CHECK(a.epoch_loss == b.epoch_loss);
  cfg.shuffle_seed += 1;
  const auto c = fit<float>(td, tiny_model(), cfg);
  CHECK_FALSE(a.params == c.params);
}

TEST_CASE("batches without valid targets are skipped and counted") {
  const auto data = prepare(lagged_series());
  auto raw = lagged_series();
  std::fill(raw.valid[0].begin(), raw.valid[0].end(), 0);
  const WindowSpec window{24, 12, 12};
  TrainingData td{&data.inputs, &raw, {0, 2 * 144}, window, default_feature_roles()};
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 1;
  const std::size_t per_turbine = window_count(2 * 144, window);
  const auto r = fit<double>(td, tiny_model(), cfg);
  CHECK(r.skipped_batches == per_turbine);
  CHECK(r.optimizer_steps == per_turbine);

  cfg.mask_invalid_targets = false;
  const auto unmasked = fit<double>(td, tiny_model(), cfg);
  CHECK(unmasked.skipped_batches == 0);
  CHECK(unmasked.optimizer_steps == 2 * per_turbine);

  std::fill(raw.valid[1].begin(), raw.valid[1].end(), 0);
  cfg.mask_invalid_targets = true;
  try {
    fit<double>(td, tiny_model(), cfg);
    FAIL("epoch without any valid target accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoTrainingData);
  }
}

TEST_CASE("fit rejects ranges without a full window") {
  const auto data = prepare(lagged_series());
  TrainingData td{&data.inputs, &data.raw, {0, 30}, {24, 12, 1}, default_feature_roles()};
  try {
    fit<double>(td, tiny_model(), TrainConfig{});
    FAIL("short range accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoTrainingData);
  }
}

TEST_CASE("checkpoint round-trip") {
  const auto model = tiny_model();
  Checkpoint<float> ck{model, TrainConfig{}, init_params<float>(model, 5), {}};
  ck.adam = AdamState<float>::zeros_like(ck.params);
  ck.adam.step = 17;
  ck.adam.m[0][0] = 0.25f;

  const auto path = (std::filesystem::temp_directory_path() / "windfc_test.ckpt").string();
  save_checkpoint(path, ck);
  const auto loaded = load_checkpoint<float>(path);
  CHECK(loaded.model == ck.model);
  CHECK(loaded.train == ck.train);
  CHECK(loaded.params == ck.params);
  CHECK(loaded.adam == ck.adam);
  CHECK(checkpoint_bytes(loaded) == checkpoint_bytes(ck));

  const auto data = prepare(lagged_series());
  const auto batch = make_windows(data.inputs, {24, 12, 50}, default_feature_roles(), {0, 400});
  CHECK(batch_loss(loaded.params, model, batch) == batch_loss(ck.params, model, batch));
  CHECK(predict(loaded.params, model, batch_inputs<float>(batch)) ==
        predict(ck.params, model, batch_inputs<float>(batch)));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(parse_checkpoint<double>(checkpoint_bytes(ck)), Error);
}

TEST_CASE("damaged checkpoints are rejected") {
  const auto model = tiny_model();
  Checkpoint<double> ck{model, TrainConfig{}, init_params<double>(model, 5), {}};
  ck.adam = AdamState<double>::zeros_like(ck.params);
  const std::string bytes = checkpoint_bytes(ck);

  auto code = [](const std::string& b) {
    try {
      parse_checkpoint<double>(b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };

  std::string shape = bytes;
  const auto at = shape.find("embed.w");
  REQUIRE(at != std::string::npos);
  const std::size_t dim_offset = at + std::strlen("embed.w") + 4;
  shape[dim_offset] = static_cast<char>(shape[dim_offset] + 1);
  CHECK(code(shape) == ErrorCode::CorruptCheckpoint);

  std::string version = bytes;
  version[8] = 9;
  CHECK(code(version) == ErrorCode::VersionMismatch);

  CHECK(code(bytes.substr(0, bytes.size() - 3)) == ErrorCode::CorruptCheckpoint);
  CHECK(code("NOTACKPT" + bytes.substr(8)) == ErrorCode::CorruptCheckpoint);
  CHECK(code(bytes + "x") == ErrorCode::CorruptCheckpoint);
}
