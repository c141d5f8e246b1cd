#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "windfc/dataio.hpp"

namespace windfc {

/// Half-open interval of global step indices.
struct StepRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return size() == 0; }
  friend bool operator==(const StepRange&, const StepRange&) = default;
};

struct FillOptions {
  /// Replace present-but-invalid values as well as missing ones.
  bool fill_invalid = true;
  friend bool operator==(const FillOptions&, const FillOptions&) = default;
};

/// Previous-value fill; leading gaps take the first later value.
/// Only values change; `present` and `valid` are kept as they were.
TurbineSeriesSet forward_fill(TurbineSeriesSet series, const FillOptions& options = {});

struct MinMaxScaler {
  struct Bounds {
    double min = 0.0;
    double max = 0.0;
  };
  std::map<std::string, Bounds> bounds;

  bool fitted(const std::string& role) const { return bounds.contains(role); }

  double scale(const std::string& role, double x) const;
  double unscale(const std::string& role, double y) const;

  /// One "role min max" line per fitted role, printed with round-trip precision.
  void save(const std::string& path) const;
  static MinMaxScaler load(const std::string& path);
  std::string to_text() const;
  static MinMaxScaler from_text(const std::string& text);
};

/// Fits per-role min/max over every turbine within `fit_range`. NaN cells are
/// skipped; run forward_fill first. Fitting target_power is rejected.
MinMaxScaler fit_scaler(const TurbineSeriesSet& series, const std::vector<std::string>& roles,
                        StepRange fit_range);

/// Scales every role fitted in `scaler` (or only `roles` when given).
/// Degenerate roles (max == min) map to 0.
TurbineSeriesSet transform(TurbineSeriesSet series, const MinMaxScaler& scaler,
                           const std::vector<std::string>& roles = {});
TurbineSeriesSet inverse_transform(TurbineSeriesSet series, const MinMaxScaler& scaler,
                                   const std::vector<std::string>& roles = {});

/// forward_fill followed by transform with an already-fitted scaler.
TurbineSeriesSet prepare_inputs(const TurbineSeriesSet& flagged, const MinMaxScaler& scaler,
                                const FillOptions& fill = {});

struct WindowSpec {
  std::size_t input_length = 288;
  std::size_t output_length = 288;
  std::size_t stride = 1;

  void validate() const;
  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

std::vector<std::string> default_feature_roles();

/// Samples per turbine for a range of `range_length` steps (0 when too short).
std::size_t window_count(std::size_t range_length, const WindowSpec& spec);

/// A window is identified by its turbine (index into the series) and the
/// global step of its first input element.
struct WindowRef {
  std::size_t turbine = 0;
  std::size_t input_begin = 0;
};

/// Batched samples, row-major flat storage.
struct WindowBatch {
  std::size_t batch = 0;
  std::size_t input_length = 0;
  std::size_t output_length = 0;
  std::size_t n_features = 0;
  std::vector<double> inputs;          // [batch, input_length, n_features]
  std::vector<double> targets;         // [batch, output_length]
  std::vector<std::uint8_t> target_valid;  // [batch, output_length]
  std::vector<double> input_power;     // [batch, input_length], filled target history
  std::vector<int> start_slot;         // intraday slot of the first target step
  std::vector<std::size_t> first_target_step;
  std::vector<int> turbine_id;
};

/// Every window inside `range` for every turbine, turbine-major.
std::vector<WindowRef> enumerate_windows(const TurbineSeriesSet& series, const WindowSpec& spec,
                                         StepRange range);

/// Copies the referenced windows. `inputs_source` supplies features (filled
/// and scaled); `targets_source` supplies targets and validity (typically the
/// raw, unfilled series). Both must share layout.
WindowBatch gather_windows(const TurbineSeriesSet& inputs_source, const TurbineSeriesSet& targets_source,
                           const std::vector<WindowRef>& refs, const WindowSpec& spec,
                           const std::vector<std::string>& feature_roles);

/// enumerate_windows + gather_windows over a single prepared series.
WindowBatch make_windows(const TurbineSeriesSet& series, const WindowSpec& spec,
                         const std::vector<std::string>& feature_roles, StepRange range);

/// 1-based inclusive day bounds for the training and validation periods.
struct SplitDays {
  std::size_t train_first_day = 1;
  std::size_t train_last_day = 181;
  std::size_t validation_first_day = 231;
  std::size_t validation_last_day = 245;

  void validate() const;
  friend bool operator==(const SplitDays&, const SplitDays&) = default;
};

std::pair<StepRange, StepRange> temporal_split(const TurbineSeriesSet& series, const SplitDays& days = {});

}  // namespace windfc
