#include "windfc/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "windfc/error.hpp"
#include "windfc/postprocess.hpp"
#include "windfc/train.hpp"

namespace windfc {

namespace {

double pct(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoError, std::string(what) + " not found: " + path);
}

template <typename T>
TrainOutcome train_impl(const RunConfig& config, std::ostream& log) {
  const TurbineSeriesSet flagged = load_dataset(config);
  const auto [train_range, validation_range] = temporal_split(flagged, config.preprocess.split);
  (void)validation_range;

  const TurbineSeriesSet filled = forward_fill(flagged, config.preprocess.fill);
  std::vector<std::string> scaled_roles;
  for (const auto& role : config.preprocess.feature_roles) {
    if (role != roles::kTargetPower) scaled_roles.push_back(role);
  }
  const MinMaxScaler scaler = fit_scaler(filled, scaled_roles, train_range);
  const TurbineSeriesSet inputs = transform(filled, scaler);
  const DailyProfile profile = fit_daily_profile(flagged, train_range, config.postprocess);

  TrainingData data{&inputs, &flagged, train_range, config.preprocess.window, config.preprocess.feature_roles};
  log << "training on " << inputs.n_turbines() << " turbines, steps [" << train_range.begin << ", "
      << train_range.end << "), " << param_count(config.model) << " parameters\n";
  FitResult<T> fitted = fit<T>(data, config.model, config.train);
  for (std::size_t e = 0; e < fitted.epoch_loss.size(); ++e) {
    log << "epoch " << e + 1 << "/" << fitted.epoch_loss.size() << "  loss " << fitted.epoch_loss[e] << "\n";
  }

  TrainOutcome out;
  out.epoch_loss = fitted.epoch_loss;
  out.optimizer_steps = fitted.optimizer_steps;
  out.skipped_batches = fitted.skipped_batches;

  out.artifacts.push_back(echo_config(config));
  const std::string ckpt = config.resolve(config.paths.checkpoint);
  save_checkpoint<T>(ckpt, Checkpoint<T>{config.model, config.train, fitted.params, fitted.adam});
  out.artifacts.push_back(ckpt);
  const std::string scaler_path = config.resolve(config.paths.scaler);
  scaler.save(scaler_path);
  out.artifacts.push_back(scaler_path);
  const std::string profile_path = config.resolve(config.paths.profile);
  profile.save(profile_path);
  out.artifacts.push_back(profile_path);

  const std::string history_path = config.resolve(config.paths.loss_history);
  std::ofstream history(history_path, std::ios::binary | std::ios::trunc);
  if (!history) throw Error(ErrorCode::IoError, "cannot write " + history_path);
  history << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < fitted.epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, fitted.epoch_loss[e]);
    history << buf;
  }
  out.artifacts.push_back(history_path);
  return out;
}

struct Artifacts {
  MinMaxScaler scaler;
  DailyProfile profile;
  std::string checkpoint;
};

Artifacts load_artifacts(const RunConfig& config) {
  Artifacts a;
  a.checkpoint = config.resolve(config.paths.checkpoint);
  const std::string scaler_path = config.resolve(config.paths.scaler);
  const std::string profile_path = config.resolve(config.paths.profile);
  require_file(a.checkpoint, "checkpoint");
  require_file(scaler_path, "scaler");
  require_file(profile_path, "profile");
  a.scaler = MinMaxScaler::load(scaler_path);
  a.profile = DailyProfile::load(profile_path);
  return a;
}

template <typename T>
Forecast predict_impl(const RunConfig& config, std::optional<std::size_t> input_begin) {
  const Artifacts art = load_artifacts(config);
  const Checkpoint<T> ck = load_checkpoint<T>(art.checkpoint);
  const ForecasterConfig& model = ck.model;
  const TurbineSeriesSet flagged = load_dataset(config);
  const TurbineSeriesSet inputs = prepare_inputs(flagged, art.scaler, config.preprocess.fill);

  const std::size_t in_len = model.input_length;
  if (flagged.n_steps < in_len) throw Error(ErrorCode::RangeTooShort, "data shorter than one input window");
  const std::size_t begin = input_begin.value_or(flagged.n_steps - in_len);
  if (begin + in_len > flagged.n_steps) throw Error(ErrorCode::RangeTooShort, "input window runs past the data");

  std::vector<std::size_t> feature_index;
  for (const auto& role : config.preprocess.feature_roles) feature_index.push_back(inputs.role_index(role));
  const std::size_t nf = feature_index.size();
  const std::size_t nt = inputs.n_turbines();
  ad::Tensor<T> x({nt, in_len, nf});
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t s = 0; s < in_len; ++s) {
      for (std::size_t f = 0; f < nf; ++f) {
        x[(t * in_len + s) * nf + f] = static_cast<T>(inputs.values[t][feature_index[f]][begin + s]);
      }
    }
  }
  const ad::Tensor<T> pred = predict(ck.params, model, x);

  Forecast out;
  out.turbine_ids = inputs.turbine_ids;
  out.first_target_step = begin + in_len;
  out.horizon = model.output_length;
  const int slot = start_slot_of(out.first_target_step);
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<double> raw(out.horizon);
    for (std::size_t h = 0; h < out.horizon; ++h) raw[h] = static_cast<double>(pred[t * out.horizon + h]);
    const auto adjusted = apply_daily_fluctuation(raw, slot, art.profile, config.postprocess);
    out.values.insert(out.values.end(), adjusted.begin(), adjusted.end());
  }
  return out;
}

template <typename T>
BacktestResult evaluate_impl(const RunConfig& config, std::ostream& out) {
  const Artifacts art = load_artifacts(config);
  const Checkpoint<T> ck = load_checkpoint<T>(art.checkpoint);
  const TurbineSeriesSet flagged = load_dataset(config);
  const auto [train_range, validation_range] = temporal_split(flagged, config.preprocess.split);
  (void)train_range;

  BacktestSetup setup;
  setup.series = &flagged;
  setup.scaler = &art.scaler;
  setup.profile = &art.profile;
  setup.validation = validation_range;
  setup.window = config.preprocess.window;
  setup.feature_roles = config.preprocess.feature_roles;
  setup.fill = config.preprocess.fill;
  setup.postprocess = config.postprocess;
  BacktestResult result = backtest<T>(ck.params, ck.model, setup, config.evaluate);

  echo_config(config);
  write_report_csv(config.resolve(config.paths.report), result.model);
  write_report_csv(config.resolve(config.paths.persistence_report), result.persistence);
  print_comparison(out, {&result.model, &result.persistence});
  return result;
}

}  // namespace

TurbineSeriesSet load_dataset(const RunConfig& config) {
  if (config.data.path.empty()) throw Error(ErrorCode::ConfigError, "data.path is not set");
  return flag_invalid(load_csv(config.data.path, config.data.schema), config.data.validity);
}

DatasetSummary summarize(const TurbineSeriesSet& series, const ColumnSchema& schema) {
  DatasetSummary s;
  s.n_turbines = series.n_turbines();
  s.n_days = series.n_days();
  s.n_steps = series.n_steps;
  const std::size_t cells = series.n_turbines() * series.n_steps;
  std::size_t absent = 0;
  std::size_t invalid = 0;
  for (std::size_t t = 0; t < series.n_turbines(); ++t) {
    for (std::size_t i = 0; i < series.n_steps; ++i) {
      absent += !series.present[t][i];
      invalid += !series.valid[t][i];
    }
  }
  s.absent_pct = pct(absent, cells);
  s.invalid_pct = pct(invalid, cells);
  for (std::size_t r = 0; r < series.roles.size(); ++r) {
    RoleSummary role;
    role.role = series.roles[r];
    if (auto it = schema.role_map.find(role.role); it != schema.role_map.end()) role.column = it->second;
    std::size_t missing = 0;
    std::size_t bad = 0;
    for (std::size_t t = 0; t < series.n_turbines(); ++t) {
      const auto& column = series.values[t][r];
      for (std::size_t i = 0; i < series.n_steps; ++i) {
        if (std::isnan(column[i])) {
          ++missing;
        } else if (!series.valid[t][i]) {
          ++bad;
        }
      }
    }
    role.missing_pct = pct(missing, cells);
    role.invalid_pct = pct(bad, cells);
    s.roles.push_back(role);
  }
  return s;
}

void print_summary(std::ostream& out, const DatasetSummary& s) {
  out << s.n_turbines << " turbines, " << s.n_days << " days (" << s.n_steps << " steps per turbine)\n";
  out << std::fixed << std::setprecision(2);
  out << "steps without a usable row: " << s.absent_pct << "%, invalid steps: " << s.invalid_pct << "%\n";
  out << std::left << std::setw(24) << "role" << std::setw(10) << "column" << std::right << std::setw(12)
      << "missing %" << std::setw(12) << "invalid %" << "\n";
  for (const auto& r : s.roles) {
    out << std::left << std::setw(24) << r.role << std::setw(10) << r.column << std::right << std::setw(12)
        << r.missing_pct << std::setw(12) << r.invalid_pct << "\n";
  }
  out.unsetf(std::ios::fixed);
  out << std::setprecision(6);
}

TrainOutcome run_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  return config.precision == "float64" ? train_impl<double>(config, log) : train_impl<float>(config, log);
}

Forecast run_predict(const RunConfig& config, std::optional<std::size_t> input_begin) {
  config.validate();
  return config.precision == "float64" ? predict_impl<double>(config, input_begin)
                                       : predict_impl<float>(config, input_begin);
}

std::string forecast_csv(const Forecast& f) {
  std::string out = "turbine_id,step,prediction_kw\n";
  char buf[96];
  for (std::size_t t = 0; t < f.turbine_ids.size(); ++t) {
    for (std::size_t h = 0; h < f.horizon; ++h) {
      std::snprintf(buf, sizeof buf, "%d,%zu,%.17g\n", f.turbine_ids[t], h, f.values[t * f.horizon + h]);
      out += buf;
    }
  }
  return out;
}

void write_forecast_csv(const std::string& path, const Forecast& forecast) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << forecast_csv(forecast);
}

BacktestResult run_evaluate(const RunConfig& config, std::ostream& out) {
  config.validate();
  return config.precision == "float64" ? evaluate_impl<double>(config, out) : evaluate_impl<float>(config, out);
}

std::string echo_config(const RunConfig& config) {
  if (!config.paths.output_dir.empty()) std::filesystem::create_directories(config.paths.output_dir);
  const std::string path = config.resolve(config.paths.echoed_config);
  config.save(path);
  return path;
}

}  // namespace windfc
