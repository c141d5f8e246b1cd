#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "windfc/dataio.hpp"
#include "windfc/preprocess.hpp"

namespace windfc {

struct PostprocessConfig {
  double multiplier = 36.0;
  bool boost_enabled = true;
  double boost_factor = 1.1;
  /// Predictions above this (after the profile is added) are multiplied by
  /// boost_factor. No reference value exists; 810 kW (half the clamp
  /// ceiling) is a tuning placeholder.
  double boost_threshold = 810.0;
  bool clamp_enabled = true;
  double clamp_min = 0.0;
  double clamp_max = 1620.0;
  bool center_profile = false;

  void validate() const;
  friend bool operator==(const PostprocessConfig&, const PostprocessConfig&) = default;
};

/// Farm-wide intraday fluctuation: per-slot mean power, min-max
/// standardized to [0, 1], times the multiplier.
struct DailyProfile {
  std::vector<double> values;  // 144 slots once fitted
  double multiplier = 36.0;
  StepRange source_range;

  bool fitted() const { return values.size() == static_cast<std::size_t>(kRecordsPerDay); }

  /// Header lines "# multiplier", "# range", then "slot value" per line.
  std::string to_text() const;
  static DailyProfile from_text(const std::string& text);
  void save(const std::string& path) const;
  static DailyProfile load(const std::string& path);
};

/// Averages valid target power of every turbine per intraday slot over
/// `range`. Throws EmptySlot when a slot has no valid observation.
DailyProfile fit_daily_profile(const TurbineSeriesSet& series, StepRange range, const PostprocessConfig& config);

/// Per-slot mean valid power before standardization (exposed for diagnostics).
std::vector<double> slot_means(const TurbineSeriesSet& series, StepRange range);

/// Min-max standardizes slot means to [0, 1] and multiplies; a flat input
/// maps to all zeros. Centers on zero mean when config.center_profile is set.
std::vector<double> scale_profile(std::span<const double> means, const PostprocessConfig& config);

/// adjusted[t] = pred[t] + profile[(start_slot + t) mod 144], then the
/// optional boost above threshold, then the optional clamp.
std::vector<double> apply_daily_fluctuation(std::span<const double> pred, int start_slot, const DailyProfile& profile,
                                            const PostprocessConfig& config);

/// Profile whose slot s holds the original slot (s + k) mod 144.
DailyProfile rotate_profile(const DailyProfile& profile, int k);

/// Intraday slot of a global step.
int start_slot_of(std::size_t first_target_step, int records_per_day = kRecordsPerDay);

}  // namespace windfc
