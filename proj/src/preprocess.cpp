#include "windfc/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "windfc/error.hpp"

namespace windfc {

TurbineSeriesSet forward_fill(TurbineSeriesSet series, const FillOptions& options) {
  for (std::size_t t = 0; t < series.n_turbines(); ++t) {
    const auto& valid = series.valid[t];
    for (std::size_t r = 0; r < series.roles.size(); ++r) {
      auto& column = series.values[t][r];
      auto usable = [&](std::size_t s) {
        return !std::isnan(column[s]) && (!options.fill_invalid || valid[s]);
      };
      std::size_t first = 0;
      while (first < column.size() && !usable(first)) ++first;
      if (first == column.size()) {
        throw Error(ErrorCode::AllMissing,
                    "turbine " + std::to_string(series.turbine_ids[t]) + ", role " + series.roles[r]);
      }
      const double head = column[first];
      for (std::size_t s = 0; s < first; ++s) column[s] = head;
      double last = head;
      for (std::size_t s = first; s < column.size(); ++s) {
        if (usable(s)) {
          last = column[s];
        } else {
          column[s] = last;
        }
      }
    }
  }
  return series;
}

double MinMaxScaler::scale(const std::string& role, double x) const {
  auto it = bounds.find(role);
  if (it == bounds.end()) throw Error(ErrorCode::UnfittedRole, role);
  const auto [lo, hi] = it->second;
  if (hi == lo) return 0.0;
  return (x - lo) / (hi - lo);
}

double MinMaxScaler::unscale(const std::string& role, double y) const {
  auto it = bounds.find(role);
  if (it == bounds.end()) throw Error(ErrorCode::UnfittedRole, role);
  const auto [lo, hi] = it->second;
  if (hi == lo) return lo;
  return y * (hi - lo) + lo;
}

std::string MinMaxScaler::to_text() const {
  std::string out;
  char buf[128];
  for (const auto& [role, b] : bounds) {
    std::snprintf(buf, sizeof buf, " %.17g %.17g\n", b.min, b.max);
    out += role;
    out += buf;
  }
  return out;
}

MinMaxScaler MinMaxScaler::from_text(const std::string& text) {
  MinMaxScaler scaler;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string role;
    std::string lo;
    std::string hi;
    if (!(fields >> role >> lo >> hi)) throw Error(ErrorCode::IoError, "bad scaler line: " + line);
    Bounds b{std::strtod(lo.c_str(), nullptr), std::strtod(hi.c_str(), nullptr)};
    if (!(b.max >= b.min)) throw Error(ErrorCode::IoError, "scaler max < min for " + role);
    scaler.bounds[role] = b;
  }
  return scaler;
}

void MinMaxScaler::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << to_text();
}

MinMaxScaler MinMaxScaler::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

MinMaxScaler fit_scaler(const TurbineSeriesSet& series, const std::vector<std::string>& roles,
                        StepRange fit_range) {
  if (fit_range.empty() || fit_range.end > series.n_steps) {
    throw Error(ErrorCode::InvalidArgument, "fit range empty or out of bounds");
  }
  MinMaxScaler scaler;
  for (const auto& role : roles) {
    if (role == roles::kTargetPower) {
      throw Error(ErrorCode::InvalidArgument, "target_power is never scaled");
    }
    const std::size_t r = series.role_index(role);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < series.n_turbines(); ++t) {
      const auto& column = series.values[t][r];
      for (std::size_t s = fit_range.begin; s < fit_range.end; ++s) {
        if (std::isnan(column[s])) continue;
        lo = std::min(lo, column[s]);
        hi = std::max(hi, column[s]);
      }
    }
    if (lo > hi) throw Error(ErrorCode::AllMissing, "no values for role " + role + " in fit range");
    scaler.bounds[role] = {lo, hi};
  }
  return scaler;
}

namespace {

template <typename F>
TurbineSeriesSet map_roles(TurbineSeriesSet series, const MinMaxScaler& scaler,
                           const std::vector<std::string>& roles, F&& fn) {
  std::vector<std::string> selected = roles;
  if (selected.empty()) {
    for (const auto& [role, b] : scaler.bounds) {
      if (series.has_role(role)) selected.push_back(role);
    }
  }
  for (const auto& role : selected) {
    if (role == roles::kTargetPower) continue;
    if (!scaler.fitted(role)) throw Error(ErrorCode::UnfittedRole, role);
    const std::size_t r = series.role_index(role);
    for (std::size_t t = 0; t < series.n_turbines(); ++t) {
      for (double& x : series.values[t][r]) x = fn(role, x);
    }
  }
  return series;
}

}  // namespace

TurbineSeriesSet transform(TurbineSeriesSet series, const MinMaxScaler& scaler,
                           const std::vector<std::string>& roles) {
  return map_roles(std::move(series), scaler, roles,
                   [&](const std::string& role, double x) { return scaler.scale(role, x); });
}

TurbineSeriesSet inverse_transform(TurbineSeriesSet series, const MinMaxScaler& scaler,
                                   const std::vector<std::string>& roles) {
  return map_roles(std::move(series), scaler, roles,
                   [&](const std::string& role, double y) { return scaler.unscale(role, y); });
}

TurbineSeriesSet prepare_inputs(const TurbineSeriesSet& flagged, const MinMaxScaler& scaler,
                                const FillOptions& fill) {
  return transform(forward_fill(flagged, fill), scaler);
}

void WindowSpec::validate() const {
  if (input_length == 0 || output_length == 0 || stride == 0) {
    throw Error(ErrorCode::InvalidArgument, "window lengths and stride must be positive");
  }
}

std::vector<std::string> default_feature_roles() { return {roles::kWindSpeed, roles::kWindDirection}; }

std::size_t window_count(std::size_t range_length, const WindowSpec& spec) {
  spec.validate();
  const std::size_t span = spec.input_length + spec.output_length;
  if (range_length < span) return 0;
  return (range_length - span) / spec.stride + 1;
}

std::vector<WindowRef> enumerate_windows(const TurbineSeriesSet& series, const WindowSpec& spec,
                                         StepRange range) {
  if (range.end > series.n_steps) throw Error(ErrorCode::InvalidArgument, "range exceeds series length");
  const std::size_t per_turbine = window_count(range.size(), spec);
  if (per_turbine == 0) {
    throw Error(ErrorCode::RangeTooShort, "range of " + std::to_string(range.size()) + " steps < " +
                                              std::to_string(spec.input_length + spec.output_length));
  }
  std::vector<WindowRef> refs;
  refs.reserve(per_turbine * series.n_turbines());
  for (std::size_t t = 0; t < series.n_turbines(); ++t) {
    for (std::size_t k = 0; k < per_turbine; ++k) refs.push_back({t, range.begin + k * spec.stride});
  }
  return refs;
}

WindowBatch gather_windows(const TurbineSeriesSet& inputs_source, const TurbineSeriesSet& targets_source,
                           const std::vector<WindowRef>& refs, const WindowSpec& spec,
                           const std::vector<std::string>& feature_roles) {
  if (inputs_source.n_steps != targets_source.n_steps ||
      inputs_source.n_turbines() != targets_source.n_turbines()) {
    throw Error(ErrorCode::ShapeMismatch, "input and target series differ in layout");
  }
  std::vector<std::size_t> feature_index;
  for (const auto& role : feature_roles) feature_index.push_back(inputs_source.role_index(role));
  const std::size_t input_power_role = inputs_source.role_index(roles::kTargetPower);
  const std::size_t target_role = targets_source.role_index(roles::kTargetPower);

  WindowBatch b;
  b.batch = refs.size();
  b.input_length = spec.input_length;
  b.output_length = spec.output_length;
  b.n_features = feature_index.size();
  b.inputs.resize(b.batch * b.input_length * b.n_features);
  b.targets.resize(b.batch * b.output_length);
  b.target_valid.resize(b.batch * b.output_length);
  b.input_power.resize(b.batch * b.input_length);
  b.start_slot.resize(b.batch);
  b.first_target_step.resize(b.batch);
  b.turbine_id.resize(b.batch);

  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto [t, begin] = refs[i];
    const std::size_t target_begin = begin + spec.input_length;
    if (target_begin + spec.output_length > inputs_source.n_steps) {
      throw Error(ErrorCode::RangeTooShort, "window runs past the end of the series");
    }
    const auto& in_values = inputs_source.values[t];
    double* dst = b.inputs.data() + i * b.input_length * b.n_features;
    for (std::size_t s = 0; s < spec.input_length; ++s) {
      for (std::size_t f = 0; f < feature_index.size(); ++f) {
        dst[s * b.n_features + f] = in_values[feature_index[f]][begin + s];
      }
      b.input_power[i * b.input_length + s] = in_values[input_power_role][begin + s];
    }
    const auto& target_column = targets_source.values[t][target_role];
    const auto& valid = targets_source.valid[t];
    for (std::size_t h = 0; h < spec.output_length; ++h) {
      b.targets[i * b.output_length + h] = target_column[target_begin + h];
      b.target_valid[i * b.output_length + h] = valid[target_begin + h];
    }
    b.start_slot[i] = static_cast<int>(target_begin % static_cast<std::size_t>(kRecordsPerDay));
    b.first_target_step[i] = target_begin;
    b.turbine_id[i] = inputs_source.turbine_ids[t];
  }
  return b;
}

WindowBatch make_windows(const TurbineSeriesSet& series, const WindowSpec& spec,
                         const std::vector<std::string>& feature_roles, StepRange range) {
  return gather_windows(series, series, enumerate_windows(series, spec, range), spec, feature_roles);
}

void SplitDays::validate() const {
  if (train_first_day < 1 || train_last_day < train_first_day || validation_last_day < validation_first_day ||
      validation_first_day <= train_last_day) {
    throw Error(ErrorCode::InvalidArgument, "split days must be ordered: train before validation");
  }
}

std::pair<StepRange, StepRange> temporal_split(const TurbineSeriesSet& series, const SplitDays& days) {
  days.validate();
  if (series.n_days() < days.validation_last_day) {
    throw Error(ErrorCode::InsufficientDays, "series has " + std::to_string(series.n_days()) +
                                                 " days, split needs " + std::to_string(days.validation_last_day));
  }
  const std::size_t per_day = static_cast<std::size_t>(series.records_per_day);
  StepRange train{(days.train_first_day - 1) * per_day, days.train_last_day * per_day};
  StepRange validation{(days.validation_first_day - 1) * per_day, days.validation_last_day * per_day};
  return {train, validation};
}

}  // namespace windfc
