#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "windfc/dataio.hpp"
#include "windfc/evaluate.hpp"
#include "windfc/model.hpp"
#include "windfc/postprocess.hpp"
#include "windfc/preprocess.hpp"
#include "windfc/train.hpp"

namespace windfc {

struct DataSection {
  std::string path;
  ColumnSchema schema;
  ValidityRules validity;
};

struct PreprocessSection {
  std::vector<std::string> feature_roles = default_feature_roles();
  WindowSpec window;
  SplitDays split;
  FillOptions fill;
  /// Allows target_power in feature_roles. It is fed as filled, unscaled kW.
  bool power_history_feature = false;
};

/// Artifact locations; relative paths resolve against the output directory.
struct PathsSection {
  std::string output_dir = "windfc_run";
  std::string checkpoint = "model.ckpt";
  std::string scaler = "scaler.txt";
  std::string profile = "profile.txt";
  std::string loss_history = "loss_history.csv";
  std::string forecast = "forecast.csv";
  std::string report = "report.csv";
  std::string persistence_report = "report_persistence.csv";
  std::string echoed_config = "config.json";
};

/// Everything one pipeline run needs, serializable as a single JSON record.
struct RunConfig {
  /// "float32" (default, training speed) or "float64".
  std::string precision = "float32";
  DataSection data;
  PreprocessSection preprocess;
  ForecasterConfig model;
  TrainConfig train;
  PostprocessConfig postprocess;
  EvaluateConfig evaluate;
  PathsSection paths;

  /// Cross-section checks (window vs. model lengths, feature count).
  void validate() const;

  /// Overrides every seed with one value.
  void set_seed(std::uint64_t seed);

  /// Applies "dotted.key=value"; the value is parsed as JSON and falls back
  /// to a plain string.
  void apply_override(const std::string& assignment);

  std::string resolve(const std::string& path) const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  std::string to_text() const;
  static RunConfig from_text(const std::string& text);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace windfc
