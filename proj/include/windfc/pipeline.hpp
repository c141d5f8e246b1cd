#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "windfc/config.hpp"
#include "windfc/evaluate.hpp"

namespace windfc {

struct RoleSummary {
  std::string role;
  std::string column;
  double missing_pct = 0.0;  // grid cells with no parsed value
  double invalid_pct = 0.0;  // grid cells with a value on an invalid step
};

struct DatasetSummary {
  std::size_t n_turbines = 0;
  std::size_t n_days = 0;
  std::size_t n_steps = 0;
  double absent_pct = 0.0;   // grid steps without a usable row
  double invalid_pct = 0.0;  // grid steps failing the validity rules
  std::vector<RoleSummary> roles;
};

/// Loads the configured CSV and applies the validity rules.
TurbineSeriesSet load_dataset(const RunConfig& config);

DatasetSummary summarize(const TurbineSeriesSet& series, const ColumnSchema& schema);
void print_summary(std::ostream& out, const DatasetSummary& summary);

struct TrainOutcome {
  std::vector<double> epoch_loss;
  std::size_t optimizer_steps = 0;
  std::size_t skipped_batches = 0;
  std::vector<std::string> artifacts;
};

/// Fits scaler, daily profile and model on the training split and writes
/// checkpoint, scaler, profile, loss history and the echoed config.
TrainOutcome run_train(const RunConfig& config, std::ostream& log);

struct Forecast {
  std::vector<int> turbine_ids;
  std::size_t first_target_step = 0;
  std::size_t horizon = 0;
  std::vector<double> values;  // [turbine, horizon], kW, post-processed
};

/// Forecasts the `output_length` steps that follow the input window starting
/// at `input_begin` (default: the last full input window of the data).
Forecast run_predict(const RunConfig& config, std::optional<std::size_t> input_begin = std::nullopt);

/// Columns turbine_id,step,prediction_kw with step 0..horizon-1.
std::string forecast_csv(const Forecast& forecast);
void write_forecast_csv(const std::string& path, const Forecast& forecast);

/// Backtests on the validation split, writes both report CSVs and prints
/// the model-vs-persistence table.
BacktestResult run_evaluate(const RunConfig& config, std::ostream& out);

/// Creates the output directory and writes the config copy there.
std::string echo_config(const RunConfig& config);

}  // namespace windfc
