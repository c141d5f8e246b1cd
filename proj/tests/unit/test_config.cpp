#include <filesystem>

#include "doctest.h"
#include "windfc/config.hpp"
#include "windfc/error.hpp"
#include "windfc/serialize.hpp"

using namespace windfc;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("defaults are the reference configuration") {
  const RunConfig c;
  const auto j = c.to_json();
  CHECK(j["model"]["attn_hidden"] == 32);
  CHECK(j["model"]["dense1"] == 512);
  CHECK(j["model"]["dense2"] == 1024);
  CHECK(j["model"]["dense3"] == 288);
  CHECK(j["model"]["dense1_dropout"] == 0.25);
  CHECK(j["train"]["batch_size"] == 1024);
  CHECK(j["train"]["epochs"] == 3);
  CHECK(j["train"]["learning_rate"] == 0.005);
  CHECK(j["preprocess"]["window"]["input_length"] == 288);
  CHECK(j["preprocess"]["split"]["train_last_day"] == 181);
  CHECK(j["preprocess"]["split"]["validation_first_day"] == 231);
  CHECK(j["preprocess"]["split"]["validation_last_day"] == 245);
  CHECK(j["postprocess"]["multiplier"] == 36.0);
  CHECK(j["postprocess"]["clamp_max"] == 1620.0);
  CHECK(j["evaluate"]["n_samples"] == 195);
  CHECK(j["evaluate"]["aggregation"] == "sum");
  CHECK(j["precision"] == "float32");
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("text round-trip") {
  RunConfig c;
  c.model.attn_hidden = 16;
  c.data.validity.extra_predicates.push_back({roles::kWindSpeed, Comparison::GreaterEqual, 0.5});
  c.evaluate.aggregation = Aggregation::MeanOverSamples;
  c.paths.output_dir = "somewhere";
  const auto back = RunConfig::from_text(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.model == c.model);
  CHECK(back.evaluate == c.evaluate);
  CHECK(back.data.validity.extra_predicates.size() == 1);

  const auto path = (std::filesystem::temp_directory_path() / "windfc_cfg.json").string();
  c.save(path);
  CHECK(RunConfig::load(path).to_text() == c.to_text());
  std::filesystem::remove(path);
}

TEST_CASE("partial files keep defaults") {
  const auto c = RunConfig::from_text(R"({"train": {"epochs": 5}, "model": {"n_heads": 2}})");
  CHECK(c.train.epochs == 5);
  CHECK(c.train.batch_size == 1024);
  CHECK(c.model.n_heads == 2);
  CHECK(c.model.dense1 == 512);
}

TEST_CASE("unknown keys and bad values are config errors") {
  CHECK(code_of([] { RunConfig::from_text(R"({"trian": {}})"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { RunConfig::from_text(R"({"train": {"epoch": 3}})"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { RunConfig::from_text(R"({"train": {"epochs": "three"}})"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { RunConfig::from_text("{not json"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { RunConfig::from_text(R"({"evaluate": {"aggregation": "max"}})"); }) == ErrorCode::ConfigError);
}

TEST_CASE("dotted overrides") {
  RunConfig c;
  c.apply_override("train.epochs=7");
  c.apply_override("data.path=/tmp/x.csv");
  c.apply_override("postprocess.boost_enabled=false");
  c.apply_override("preprocess.feature_roles=[\"wind_speed\"]");
  CHECK(c.train.epochs == 7);
  CHECK(c.data.path == "/tmp/x.csv");
  CHECK_FALSE(c.postprocess.boost_enabled);
  CHECK(c.preprocess.feature_roles.size() == 1);
  CHECK(code_of([&] { c.apply_override("train.epochz=1"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { c.apply_override("noequals"); }) == ErrorCode::ConfigError);
}

TEST_CASE("cross-section validation") {
  RunConfig c;
  c.train.epochs = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::ConfigError);
  c = RunConfig{};
  c.model.input_length = 144;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::ConfigError);
  c = RunConfig{};
  c.preprocess.feature_roles = {"wind_speed", "target_power"};
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::ConfigError);
  c.preprocess.power_history_feature = true;
  CHECK_NOTHROW(c.validate());
  CHECK(RunConfig::from_text(c.to_text()).preprocess.power_history_feature);
  c = RunConfig{};
  c.precision = "half";
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::ConfigError);
}

TEST_CASE("seed override touches every seed") {
  RunConfig c;
  c.set_seed(99);
  CHECK(c.train.shuffle_seed == 99);
  CHECK(c.train.init_seed == 99);
  CHECK(c.train.dropout_seed == 99);
  CHECK(c.evaluate.sample_seed == 99);
}

TEST_CASE("relative artifact paths resolve under the output directory") {
  RunConfig c;
  c.paths.output_dir = "out";
  CHECK(c.resolve("model.ckpt") == (std::filesystem::path("out") / "model.ckpt").string());
  CHECK(c.resolve("/abs/model.ckpt") == "/abs/model.ckpt");
}
