#pragma once

#include "json.hpp"

#include "windfc/dataio.hpp"
#include "windfc/evaluate.hpp"
#include "windfc/model.hpp"
#include "windfc/postprocess.hpp"
#include "windfc/preprocess.hpp"
#include "windfc/train.hpp"

// JSON conversions for every configuration record. Readers start from the
// struct defaults, so missing keys keep them; unknown keys raise ConfigError.

namespace windfc {

void to_json(nlohmann::json& j, const ColumnSchema& v);
void from_json(const nlohmann::json& j, ColumnSchema& v);
void to_json(nlohmann::json& j, const RolePredicate& v);
void from_json(const nlohmann::json& j, RolePredicate& v);
void to_json(nlohmann::json& j, const ValidityRules& v);
void from_json(const nlohmann::json& j, ValidityRules& v);
void to_json(nlohmann::json& j, const WindowSpec& v);
void from_json(const nlohmann::json& j, WindowSpec& v);
void to_json(nlohmann::json& j, const SplitDays& v);
void from_json(const nlohmann::json& j, SplitDays& v);
void to_json(nlohmann::json& j, const FillOptions& v);
void from_json(const nlohmann::json& j, FillOptions& v);
void to_json(nlohmann::json& j, const ForecasterConfig& v);
void from_json(const nlohmann::json& j, ForecasterConfig& v);
void to_json(nlohmann::json& j, const TrainConfig& v);
void from_json(const nlohmann::json& j, TrainConfig& v);
void to_json(nlohmann::json& j, const PostprocessConfig& v);
void from_json(const nlohmann::json& j, PostprocessConfig& v);
void to_json(nlohmann::json& j, const EvaluateConfig& v);
void from_json(const nlohmann::json& j, EvaluateConfig& v);

}  // namespace windfc
