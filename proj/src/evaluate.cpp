#include "windfc/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "windfc/error.hpp"
#include "windfc/train.hpp"

namespace windfc {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> truth, std::span<const std::uint8_t> valid) {
  if (pred.size() != truth.size() || pred.size() != valid.size()) {
    throw Error(ErrorCode::ShapeMismatch, "metric inputs differ in length");
  }
}

template <typename F>
std::optional<double> masked_mean(std::span<const double> pred, std::span<const double> truth,
                                  std::span<const std::uint8_t> valid, bool exclude_invalid, F&& err) {
  check_lengths(pred, truth, valid);
  double total = 0.0;
  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!valid[i]) continue;
    total += err(pred[i] - truth[i]);
    ++n_valid;
  }
  if (n_valid == 0) return std::nullopt;
  const std::size_t denom = exclude_invalid ? n_valid : pred.size();
  return total / static_cast<double>(denom);
}

double aggregate(const std::vector<double>& values, Aggregation a) {
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (a == Aggregation::MeanOverSamples) return values.empty() ? 0.0 : total / static_cast<double>(values.size());
  return total;
}

}  // namespace

std::optional<double> masked_mae(std::span<const double> pred, std::span<const double> truth,
                                 std::span<const std::uint8_t> valid, bool exclude_invalid) {
  return masked_mean(pred, truth, valid, exclude_invalid, [](double e) { return std::abs(e); });
}

std::optional<double> masked_rmse(std::span<const double> pred, std::span<const double> truth,
                                  std::span<const std::uint8_t> valid, bool exclude_invalid) {
  auto mse = masked_mean(pred, truth, valid, exclude_invalid, [](double e) { return e * e; });
  if (!mse) return std::nullopt;
  return std::sqrt(*mse);
}

SampleScore score_sample(const std::map<int, std::vector<double>>& preds,
                         const std::map<int, std::vector<double>>& truths,
                         const std::map<int, std::vector<std::uint8_t>>& masks, const ScoreOptions& options) {
  if (!(options.unit_divisor > 0.0)) throw Error(ErrorCode::InvalidArgument, "unit_divisor must be positive");
  if (preds.size() != truths.size() || preds.size() != masks.size()) {
    throw Error(ErrorCode::TurbineSetMismatch, "prediction, truth and mask turbine counts differ");
  }
  SampleScore out;
  double mae_sum = 0.0;
  double rmse_sum = 0.0;
  double score_sum = 0.0;
  for (const auto& [id, pred] : preds) {
    auto truth = truths.find(id);
    auto mask = masks.find(id);
    if (truth == truths.end() || mask == masks.end()) {
      throw Error(ErrorCode::TurbineSetMismatch, "turbine " + std::to_string(id) + " missing truth or mask");
    }
    auto mae = masked_mae(pred, truth->second, mask->second, options.exclude_invalid);
    auto rmse = masked_rmse(pred, truth->second, mask->second, options.exclude_invalid);
    if (!mae || !rmse) continue;
    const double score = (*mae + *rmse) / 2.0;
    out.turbines.push_back({id, *mae, *rmse, score});
    mae_sum += *mae;
    rmse_sum += *rmse;
    score_sum += score;
  }
  out.mae = mae_sum / options.unit_divisor;
  out.rmse = rmse_sum / options.unit_divisor;
  out.score = score_sum / options.unit_divisor;
  return out;
}

std::vector<double> persistence_forecast(std::span<const double> input_power, std::size_t horizon) {
  if (input_power.empty()) throw Error(ErrorCode::InvalidArgument, "persistence needs a nonempty input window");
  return std::vector<double>(horizon, input_power.back());
}

std::string to_string(Aggregation a) { return a == Aggregation::SumOverSamples ? "sum" : "mean"; }

Aggregation parse_aggregation(const std::string& name) {
  if (name == "sum") return Aggregation::SumOverSamples;
  if (name == "mean") return Aggregation::MeanOverSamples;
  throw Error(ErrorCode::ConfigError, "aggregation must be 'sum' or 'mean', got '" + name + "'");
}

void EvaluateConfig::validate() const {
  if (n_samples == 0) throw Error(ErrorCode::ConfigError, "evaluate.n_samples must be >= 1");
  if (!(unit_divisor > 0.0)) throw Error(ErrorCode::ConfigError, "evaluate.unit_divisor must be > 0");
}

MetricReport build_report(const std::string& model, const std::vector<SampleScore>& samples,
                          const std::vector<std::size_t>& first_target_steps, const EvaluateConfig& config) {
  MetricReport r;
  r.model = model;
  r.n_samples = samples.size();
  r.aggregation = config.aggregation;
  r.unit_divisor = config.unit_divisor;

  std::map<int, std::vector<TurbineScore>> by_turbine;
  std::vector<double> maes;
  std::vector<double> rmses;
  std::vector<double> scores;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    for (const auto& t : s.turbines) {
      r.rows.push_back({i, t.turbine_id, t.mae, t.rmse, t.score});
      by_turbine[t.turbine_id].push_back(t);
    }
    r.samples.push_back({i, i < first_target_steps.size() ? first_target_steps[i] : 0, s.mae, s.rmse, s.score});
    maes.push_back(s.mae);
    rmses.push_back(s.rmse);
    scores.push_back(s.score);
  }
  for (const auto& [id, list] : by_turbine) {
    std::vector<double> m;
    std::vector<double> e;
    std::vector<double> sc;
    for (const auto& t : list) {
      m.push_back(t.mae);
      e.push_back(t.rmse);
      sc.push_back(t.score);
    }
    r.per_turbine.push_back({id, aggregate(m, config.aggregation), aggregate(e, config.aggregation),
                             aggregate(sc, config.aggregation)});
  }
  r.farm_mae = aggregate(maes, config.aggregation);
  r.farm_rmse = aggregate(rmses, config.aggregation);
  r.farm_score = aggregate(scores, config.aggregation);
  return r;
}

std::string report_csv(const MetricReport& report) {
  std::string out = "sample_id,turbine_id,mae,rmse,score\n";
  char buf[160];
  std::size_t row = 0;
  for (const auto& s : report.samples) {
    for (; row < report.rows.size() && report.rows[row].sample_id == s.sample_id; ++row) {
      const auto& r = report.rows[row];
      std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g,%.17g\n", r.sample_id, r.turbine_id, r.mae, r.rmse, r.score);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%zu,ALL,%.17g,%.17g,%.17g\n", s.sample_id, s.mae, s.rmse, s.score);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "ALL,ALL,%.17g,%.17g,%.17g\n", report.farm_mae, report.farm_rmse, report.farm_score);
  out += buf;
  return out;
}

void write_report_csv(const std::string& path, const MetricReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << report_csv(report);
}

void print_comparison(std::ostream& out, const std::vector<const MetricReport*>& reports) {
  if (reports.empty()) return;
  const auto* first = reports.front();
  out << "samples: " << first->n_samples << "  aggregation: " << to_string(first->aggregation)
      << "  unit divisor: " << first->unit_divisor << "\n";
  out << std::left << std::setw(14) << "model" << std::right << std::setw(14) << "MAE" << std::setw(14) << "RMSE"
      << std::setw(14) << "score" << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto* r : reports) {
    out << std::left << std::setw(14) << r->model << std::right << std::setw(14) << r->farm_mae << std::setw(14)
        << r->farm_rmse << std::setw(14) << r->farm_score << "\n";
  }
  out.unsetf(std::ios::fixed);
}

std::vector<std::size_t> draw_sample_starts(StepRange range, const WindowSpec& window, std::size_t n,
                                            std::uint64_t seed) {
  WindowSpec unit = window;
  unit.stride = 1;
  const std::size_t admissible = window_count(range.size(), unit);
  if (admissible == 0) {
    throw Error(ErrorCode::RangeTooShort, "validation range of " + std::to_string(range.size()) +
                                              " steps holds no full window");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> starts;
  starts.reserve(n);
  if (n <= admissible) {
    // partial Fisher-Yates over offsets
    std::vector<std::size_t> offsets(admissible);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, admissible - 1);
      std::swap(offsets[i], offsets[pick(rng)]);
      starts.push_back(range.begin + offsets[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, admissible - 1);
    for (std::size_t i = 0; i < n; ++i) starts.push_back(range.begin + pick(rng));
  }
  std::sort(starts.begin(), starts.end());
  return starts;
}

template <typename T>
BacktestResult backtest(const ForecasterParams<T>& params, const ForecasterConfig& model_config,
                        const BacktestSetup& setup, const EvaluateConfig& config) {
  config.validate();
  if (!setup.series || !setup.scaler) throw Error(ErrorCode::InvalidArgument, "backtest needs series and scaler");
  if (setup.apply_postprocess && !setup.profile) throw Error(ErrorCode::ProfileNotFitted, "backtest without profile");
  if (setup.validation.end > setup.series->n_steps) {
    throw Error(ErrorCode::InvalidArgument, "validation range exceeds series");
  }

  const TurbineSeriesSet prepared = prepare_inputs(*setup.series, *setup.scaler, setup.fill);
  BacktestResult result;
  result.sample_starts = draw_sample_starts(setup.validation, setup.window, config.n_samples, config.sample_seed);

  const ScoreOptions options{config.unit_divisor, config.exclude_invalid};
  const std::size_t horizon = setup.window.output_length;
  std::vector<SampleScore> model_scores;
  std::vector<SampleScore> baseline_scores;
  std::vector<std::size_t> first_steps;

  std::vector<WindowRef> refs(prepared.n_turbines());
  for (std::size_t start : result.sample_starts) {
    for (std::size_t t = 0; t < refs.size(); ++t) refs[t] = {t, start};
    const WindowBatch batch = gather_windows(prepared, *setup.series, refs, setup.window, setup.feature_roles);
    const ad::Tensor<T> pred = predict(params, model_config, batch_inputs<T>(batch));

    std::map<int, std::vector<double>> model_pred;
    std::map<int, std::vector<double>> baseline_pred;
    std::map<int, std::vector<double>> truth;
    std::map<int, std::vector<std::uint8_t>> mask;
    for (std::size_t j = 0; j < batch.batch; ++j) {
      const int id = batch.turbine_id[j];
      std::vector<double> raw(pred.data().begin() + static_cast<std::ptrdiff_t>(j * horizon),
                              pred.data().begin() + static_cast<std::ptrdiff_t>((j + 1) * horizon));
      model_pred[id] = setup.apply_postprocess
                           ? apply_daily_fluctuation(raw, batch.start_slot[j], *setup.profile, setup.postprocess)
                           : raw;
      baseline_pred[id] = persistence_forecast(
          std::span<const double>(batch.input_power).subspan(j * batch.input_length, batch.input_length), horizon);
      truth[id].assign(batch.targets.begin() + static_cast<std::ptrdiff_t>(j * horizon),
                       batch.targets.begin() + static_cast<std::ptrdiff_t>((j + 1) * horizon));
      mask[id].assign(batch.target_valid.begin() + static_cast<std::ptrdiff_t>(j * horizon),
                      batch.target_valid.begin() + static_cast<std::ptrdiff_t>((j + 1) * horizon));
    }
    model_scores.push_back(score_sample(model_pred, truth, mask, options));
    baseline_scores.push_back(score_sample(baseline_pred, truth, mask, options));
    first_steps.push_back(start + setup.window.input_length);
  }

  result.model = build_report("model", model_scores, first_steps, config);
  result.persistence = build_report("persistence", baseline_scores, first_steps, config);
  return result;
}

template BacktestResult backtest(const ForecasterParams<float>&, const ForecasterConfig&, const BacktestSetup&,
                                 const EvaluateConfig&);
template BacktestResult backtest(const ForecasterParams<double>&, const ForecasterConfig&, const BacktestSetup&,
                                 const EvaluateConfig&);

}  // namespace windfc
