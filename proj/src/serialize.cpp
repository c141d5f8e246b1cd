#include "windfc/serialize.hpp"

#include <set>

#include "windfc/error.hpp"

namespace windfc {

using nlohmann::json;

namespace {

/// Reads the fields of one object, rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, const char* what) : j_(j), what_(what) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, std::string(what) + " must be an object");
  }

  template <typename V>
  ObjectReader& operator()(const char* key, V& field) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        it->get_to(field);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string(what_) + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw Error(ErrorCode::ConfigError, "unknown key " + std::string(what_) + "." + key);
    }
  }

 private:
  const json& j_;
  const char* what_;
  std::set<std::string> seen_;
};

}  // namespace

void to_json(json& j, const ColumnSchema& v) {
  j = json{{"turbine_id_column", v.turbine_id_column},
           {"day_column", v.day_column},
           {"time_of_day_column", v.time_of_day_column},
           {"role_map", v.role_map}};
}

void from_json(const json& j, ColumnSchema& v) {
  ObjectReader(j, "schema")("turbine_id_column", v.turbine_id_column)("day_column", v.day_column)(
      "time_of_day_column", v.time_of_day_column)("role_map", v.role_map);
}

void to_json(json& j, const RolePredicate& v) {
  j = json{{"role", v.role}, {"comparison", to_string(v.comparison)}, {"threshold", v.threshold}};
}

void from_json(const json& j, RolePredicate& v) {
  std::string comparison = to_string(v.comparison);
  ObjectReader(j, "predicate")("role", v.role)("comparison", comparison)("threshold", v.threshold);
  try {
    v.comparison = parse_comparison(comparison);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

void to_json(json& j, const ValidityRules& v) {
  j = json{{"treat_missing_invalid", v.treat_missing_invalid},
           {"treat_nonpositive_target_invalid", v.treat_nonpositive_target_invalid},
           {"extra_predicates", v.extra_predicates}};
}

void from_json(const json& j, ValidityRules& v) {
  ObjectReader(j, "validity")("treat_missing_invalid", v.treat_missing_invalid)(
      "treat_nonpositive_target_invalid", v.treat_nonpositive_target_invalid)("extra_predicates",
                                                                              v.extra_predicates);
}

void to_json(json& j, const WindowSpec& v) {
  j = json{{"input_length", v.input_length}, {"output_length", v.output_length}, {"stride", v.stride}};
}

void from_json(const json& j, WindowSpec& v) {
  ObjectReader(j, "window")("input_length", v.input_length)("output_length", v.output_length)("stride", v.stride);
}

void to_json(json& j, const SplitDays& v) {
  j = json{{"train_first_day", v.train_first_day},
           {"train_last_day", v.train_last_day},
           {"validation_first_day", v.validation_first_day},
           {"validation_last_day", v.validation_last_day}};
}

void from_json(const json& j, SplitDays& v) {
  ObjectReader(j, "split")("train_first_day", v.train_first_day)("train_last_day", v.train_last_day)(
      "validation_first_day", v.validation_first_day)("validation_last_day", v.validation_last_day);
}

void to_json(json& j, const FillOptions& v) { j = json{{"fill_invalid", v.fill_invalid}}; }

void from_json(const json& j, FillOptions& v) { ObjectReader(j, "fill")("fill_invalid", v.fill_invalid); }

void to_json(json& j, const ForecasterConfig& v) {
  j = json{{"input_length", v.input_length},
           {"output_length", v.output_length},
           {"n_features", v.n_features},
           {"n_encoder_layers", v.n_encoder_layers},
           {"attn_hidden", v.attn_hidden},
           {"n_heads", v.n_heads},
           {"attn_dropout", v.attn_dropout},
           {"ffn_hidden", v.ffn_hidden},
           {"ffn_dropout", v.ffn_dropout},
           {"dense1", v.dense1},
           {"dense1_dropout", v.dense1_dropout},
           {"dense2", v.dense2},
           {"dense2_dropout", v.dense2_dropout},
           {"dense3", v.dense3},
           {"layer_norm_eps", v.layer_norm_eps},
           {"activation", to_string(v.activation)}};
}

void from_json(const json& j, ForecasterConfig& v) {
  std::string activation = to_string(v.activation);
  ObjectReader(j, "model")("input_length", v.input_length)("output_length", v.output_length)(
      "n_features", v.n_features)("n_encoder_layers", v.n_encoder_layers)("attn_hidden", v.attn_hidden)(
      "n_heads", v.n_heads)("attn_dropout", v.attn_dropout)("ffn_hidden", v.ffn_hidden)(
      "ffn_dropout", v.ffn_dropout)("dense1", v.dense1)("dense1_dropout", v.dense1_dropout)("dense2", v.dense2)(
      "dense2_dropout", v.dense2_dropout)("dense3", v.dense3)("layer_norm_eps", v.layer_norm_eps)(
      "activation", activation);
  v.activation = parse_activation(activation);
}

void to_json(json& j, const TrainConfig& v) {
  j = json{{"batch_size", v.batch_size},
           {"epochs", v.epochs},
           {"learning_rate", v.learning_rate},
           {"adam_beta1", v.adam_beta1},
           {"adam_beta2", v.adam_beta2},
           {"adam_eps", v.adam_eps},
           {"shuffle_seed", v.shuffle_seed},
           {"init_seed", v.init_seed},
           {"dropout_seed", v.dropout_seed},
           {"mask_invalid_targets", v.mask_invalid_targets},
           {"loss_eps", v.loss_eps}};
}

void from_json(const json& j, TrainConfig& v) {
  ObjectReader(j, "train")("batch_size", v.batch_size)("epochs", v.epochs)("learning_rate", v.learning_rate)(
      "adam_beta1", v.adam_beta1)("adam_beta2", v.adam_beta2)("adam_eps", v.adam_eps)(
      "shuffle_seed", v.shuffle_seed)("init_seed", v.init_seed)("dropout_seed", v.dropout_seed)(
      "mask_invalid_targets", v.mask_invalid_targets)("loss_eps", v.loss_eps);
}

void to_json(json& j, const PostprocessConfig& v) {
  j = json{{"multiplier", v.multiplier},         {"boost_enabled", v.boost_enabled},
           {"boost_factor", v.boost_factor},     {"boost_threshold", v.boost_threshold},
           {"clamp_enabled", v.clamp_enabled},   {"clamp_min", v.clamp_min},
           {"clamp_max", v.clamp_max},           {"center_profile", v.center_profile}};
}

void from_json(const json& j, PostprocessConfig& v) {
  ObjectReader(j, "postprocess")("multiplier", v.multiplier)("boost_enabled", v.boost_enabled)(
      "boost_factor", v.boost_factor)("boost_threshold", v.boost_threshold)("clamp_enabled", v.clamp_enabled)(
      "clamp_min", v.clamp_min)("clamp_max", v.clamp_max)("center_profile", v.center_profile);
}

void to_json(json& j, const EvaluateConfig& v) {
  j = json{{"n_samples", v.n_samples},
           {"aggregation", to_string(v.aggregation)},
           {"unit_divisor", v.unit_divisor},
           {"sample_seed", v.sample_seed},
           {"exclude_invalid", v.exclude_invalid}};
}

void from_json(const json& j, EvaluateConfig& v) {
  std::string aggregation = to_string(v.aggregation);
  ObjectReader(j, "evaluate")("n_samples", v.n_samples)("aggregation", aggregation)(
      "unit_divisor", v.unit_divisor)("sample_seed", v.sample_seed)("exclude_invalid", v.exclude_invalid);
  v.aggregation = parse_aggregation(aggregation);
}

}  // namespace windfc
