#include "windfc/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "windfc/error.hpp"
#include "windfc/serialize.hpp"

namespace windfc {

using nlohmann::json;

namespace {

json data_json(const DataSection& d) {
  return json{{"path", d.path}, {"schema", d.schema}, {"validity", d.validity}};
}

json preprocess_json(const PreprocessSection& p) {
  return json{{"feature_roles", p.feature_roles}, {"window", p.window}, {"split", p.split}, {"fill", p.fill},
              {"power_history_feature", p.power_history_feature}};
}

json paths_json(const PathsSection& p) {
  return json{{"output_dir", p.output_dir},
              {"checkpoint", p.checkpoint},
              {"scaler", p.scaler},
              {"profile", p.profile},
              {"loss_history", p.loss_history},
              {"forecast", p.forecast},
              {"report", p.report},
              {"persistence_report", p.persistence_report},
              {"echoed_config", p.echoed_config}};
}

void check_keys(const json& j, const char* section, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, std::string(section) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw Error(ErrorCode::ConfigError, "unknown key " + std::string(section) + "." + key);
  }
}

template <typename V>
void read(const json& j, const char* key, V& field, const char* section) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    it->get_to(field);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string(section) + "." + key + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  try {
    data.schema.validate();
    preprocess.window.validate();
    preprocess.split.validate();
    model.validate();
    train.validate();
    postprocess.validate();
    evaluate.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(e.what());
  }
  if (precision != "float32" && precision != "float64") fail("precision must be float32 or float64");
  if (preprocess.window.input_length != model.input_length) fail("preprocess.window.input_length != model.input_length");
  if (preprocess.window.output_length != model.output_length) {
    fail("preprocess.window.output_length != model.output_length");
  }
  if (preprocess.feature_roles.size() != model.n_features) fail("model.n_features must equal the feature role count");
  for (const auto& role : preprocess.feature_roles) {
    if (role == roles::kTargetPower && !preprocess.power_history_feature) {
      fail("target_power is an input feature only with preprocess.power_history_feature=true");
    }
    if (!data.schema.role_map.contains(role)) fail("feature role '" + role + "' is not in data.schema.role_map");
  }
  if (!data.schema.role_map.contains(roles::kTargetPower)) fail("data.schema.role_map lacks target_power");
}

void RunConfig::set_seed(std::uint64_t seed) {
  train.shuffle_seed = seed;
  train.init_seed = seed;
  train.dropout_seed = seed;
  evaluate.sample_seed = seed;
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::ConfigError, "override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json doc = to_json();
  json::json_pointer ptr;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    ptr /= key.substr(start, dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (!doc.contains(ptr)) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  doc[ptr] = value;
  *this = from_json(doc);
}

std::string RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || paths.output_dir.empty()) return p.string();
  return (std::filesystem::path(paths.output_dir) / p).string();
}

json RunConfig::to_json() const {
  return json{{"precision", precision},
              {"data", data_json(data)},       {"preprocess", preprocess_json(preprocess)},
              {"model", model},                {"train", train},
              {"postprocess", postprocess},    {"evaluate", evaluate},
              {"paths", paths_json(paths)}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  check_keys(j, "config", {"precision", "data", "preprocess", "model", "train", "postprocess", "evaluate", "paths"});
  read(j, "precision", c.precision, "config");
  if (auto it = j.find("data"); it != j.end()) {
    check_keys(*it, "data", {"path", "schema", "validity"});
    read(*it, "path", c.data.path, "data");
    read(*it, "schema", c.data.schema, "data");
    read(*it, "validity", c.data.validity, "data");
  }
  if (auto it = j.find("preprocess"); it != j.end()) {
    check_keys(*it, "preprocess", {"feature_roles", "window", "split", "fill", "power_history_feature"});
    read(*it, "feature_roles", c.preprocess.feature_roles, "preprocess");
    read(*it, "window", c.preprocess.window, "preprocess");
    read(*it, "split", c.preprocess.split, "preprocess");
    read(*it, "fill", c.preprocess.fill, "preprocess");
    read(*it, "power_history_feature", c.preprocess.power_history_feature, "preprocess");
  }
  if (auto it = j.find("model"); it != j.end()) it->get_to(c.model);
  if (auto it = j.find("train"); it != j.end()) it->get_to(c.train);
  if (auto it = j.find("postprocess"); it != j.end()) it->get_to(c.postprocess);
  if (auto it = j.find("evaluate"); it != j.end()) it->get_to(c.evaluate);
  if (auto it = j.find("paths"); it != j.end()) {
    auto& p = c.paths;
    check_keys(*it, "paths",
               {"output_dir", "checkpoint", "scaler", "profile", "loss_history", "forecast", "report",
                "persistence_report", "echoed_config"});
    read(*it, "output_dir", p.output_dir, "paths");
    read(*it, "checkpoint", p.checkpoint, "paths");
    read(*it, "scaler", p.scaler, "paths");
    read(*it, "profile", p.profile, "paths");
    read(*it, "loss_history", p.loss_history, "paths");
    read(*it, "forecast", p.forecast, "paths");
    read(*it, "report", p.report, "paths");
    read(*it, "persistence_report", p.persistence_report, "paths");
    read(*it, "echoed_config", p.echoed_config, "paths");
  }
  return c;
}

std::string RunConfig::to_text() const { return to_json().dump(2) + "\n"; }

RunConfig RunConfig::from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config parse: ") + e.what());
  }
  return from_json(j);
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << to_text();
}

}  // namespace windfc
