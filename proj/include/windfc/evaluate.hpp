#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "windfc/model.hpp"
#include "windfc/postprocess.hpp"
#include "windfc/preprocess.hpp"

namespace windfc {

struct ScoreOptions {
  double unit_divisor = 1000.0;
  /// true: invalid positions leave numerator and denominator.
  /// false: they contribute zero error but still count in the denominator.
  bool exclude_invalid = true;
};

/// Mean absolute error over valid positions; nullopt when none is valid.
std::optional<double> masked_mae(std::span<const double> pred, std::span<const double> truth,
                                 std::span<const std::uint8_t> valid, bool exclude_invalid = true);

/// Root mean squared error over valid positions; nullopt when none is valid.
std::optional<double> masked_rmse(std::span<const double> pred, std::span<const double> truth,
                                  std::span<const std::uint8_t> valid, bool exclude_invalid = true);

struct TurbineScore {
  int turbine_id = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double score = 0.0;  // (mae + rmse) / 2, kW
  friend bool operator==(const TurbineScore&, const TurbineScore&) = default;
};

struct SampleScore {
  std::vector<TurbineScore> turbines;  // turbines with at least one valid target
  double mae = 0.0;    // sum over turbines / unit_divisor
  double rmse = 0.0;
  double score = 0.0;
};

/// Sums per-turbine (MAE + RMSE) / 2 and divides by the unit divisor.
/// Throws TurbineSetMismatch when the three maps disagree on turbines.
SampleScore score_sample(const std::map<int, std::vector<double>>& preds,
                         const std::map<int, std::vector<double>>& truths,
                         const std::map<int, std::vector<std::uint8_t>>& masks, const ScoreOptions& options = {});

/// Repeats the last input power value over the horizon.
std::vector<double> persistence_forecast(std::span<const double> input_power, std::size_t horizon = 288);

enum class Aggregation { SumOverSamples, MeanOverSamples };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& name);

struct EvaluateConfig {
  std::size_t n_samples = 195;
  Aggregation aggregation = Aggregation::SumOverSamples;
  double unit_divisor = 1000.0;
  std::uint64_t sample_seed = 2022;
  bool exclude_invalid = true;

  void validate() const;
  friend bool operator==(const EvaluateConfig&, const EvaluateConfig&) = default;
};

struct ReportRow {
  std::size_t sample_id = 0;
  int turbine_id = 0;
  double mae = 0.0;
  double rmse = 0.0;
  double score = 0.0;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct SampleRow {
  std::size_t sample_id = 0;
  std::size_t first_target_step = 0;
  double mae = 0.0;  // farm-level, already divided by unit_divisor
  double rmse = 0.0;
  double score = 0.0;
  friend bool operator==(const SampleRow&, const SampleRow&) = default;
};

struct MetricReport {
  std::string model;
  std::vector<ReportRow> rows;             // per sample per turbine, kW
  std::vector<SampleRow> samples;          // per sample, farm-level
  std::vector<TurbineScore> per_turbine;   // aggregated over samples, kW
  double farm_mae = 0.0;
  double farm_rmse = 0.0;
  double farm_score = 0.0;
  std::size_t n_samples = 0;
  Aggregation aggregation = Aggregation::SumOverSamples;
  double unit_divisor = 1000.0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// Builds per-turbine and farm aggregates from per-sample scores.
MetricReport build_report(const std::string& model, const std::vector<SampleScore>& samples,
                          const std::vector<std::size_t>& first_target_steps, const EvaluateConfig& config);

/// Columns sample_id,turbine_id,mae,rmse,score. Per-sample aggregate rows
/// and a final overall row use turbine_id "ALL".
std::string report_csv(const MetricReport& report);
void write_report_csv(const std::string& path, const MetricReport& report);
void print_comparison(std::ostream& out, const std::vector<const MetricReport*>& reports);

/// Input window start positions drawn without replacement (with replacement
/// once n exceeds the number of admissible positions).
std::vector<std::size_t> draw_sample_starts(StepRange range, const WindowSpec& window, std::size_t n,
                                            std::uint64_t seed);

struct BacktestSetup {
  const TurbineSeriesSet* series = nullptr;  // flagged, not filled or scaled
  const MinMaxScaler* scaler = nullptr;      // fitted on the training range
  const DailyProfile* profile = nullptr;     // fitted on the training range
  StepRange validation;
  WindowSpec window;
  std::vector<std::string> feature_roles = default_feature_roles();
  FillOptions fill;
  PostprocessConfig postprocess;
  bool apply_postprocess = true;
};

struct BacktestResult {
  MetricReport model;
  MetricReport persistence;
  std::vector<std::size_t> sample_starts;
};

/// Scores the model (post-processed) and the persistence baseline on the
/// same randomly drawn validation windows.
template <typename T>
BacktestResult backtest(const ForecasterParams<T>& params, const ForecasterConfig& model_config,
                        const BacktestSetup& setup, const EvaluateConfig& config);

}  // namespace windfc
