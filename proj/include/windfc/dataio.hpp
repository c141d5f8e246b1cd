#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace windfc {

// Semantic role names. Extra roles may use any other name.
namespace roles {
inline constexpr const char* kWindSpeed = "wind_speed";
inline constexpr const char* kWindDirection = "wind_direction";
inline constexpr const char* kTargetPower = "target_power";
}  // namespace roles

inline constexpr int kIntervalMinutes = 10;
inline constexpr int kRecordsPerDay = 144;

/// Maps semantic roles to CSV header names. The defaults follow the public
/// SDWPF release (TurbID, Day, Tmstamp, Wspd, Wdir, Etmp, Itmp, Ndir, Pab1-3,
/// Prtv, Patv).
struct ColumnSchema {
  std::string turbine_id_column = "TurbID";
  std::string day_column = "Day";
  std::string time_of_day_column = "Tmstamp";
  std::map<std::string, std::string> role_map = default_role_map();

  static std::map<std::string, std::string> default_role_map();

  /// Throws InvalidSchema when a required role is absent or two entries share a column.
  void validate() const;
};

/// Dense per-turbine series on the (day, 10-minute slot) grid.
///
/// Step index is (day - 1) * 144 + slot. Cells that were empty or
/// non-numeric hold NaN. `present` is true where the row exists and its
/// target power parsed; `valid` is the subset that passes ValidityRules.
struct TurbineSeriesSet {
  std::vector<int> turbine_ids;
  int interval_minutes = kIntervalMinutes;
  int records_per_day = kRecordsPerDay;
  std::size_t n_steps = 0;
  std::vector<std::string> roles;
  // values[turbine][role][step]
  std::vector<std::vector<std::vector<double>>> values;
  std::vector<std::vector<std::uint8_t>> present;
  std::vector<std::vector<std::uint8_t>> valid;

  std::size_t n_turbines() const { return turbine_ids.size(); }
  std::size_t n_days() const { return n_steps / static_cast<std::size_t>(records_per_day); }

  /// Index of `role` in `roles`; throws UnknownRole.
  std::size_t role_index(const std::string& role) const;
  bool has_role(const std::string& role) const;

  std::span<const double> series(std::size_t turbine, const std::string& role) const {
    return values.at(turbine).at(role_index(role));
  }
  std::span<double> series(std::size_t turbine, const std::string& role) {
    return values.at(turbine).at(role_index(role));
  }
};

enum class Comparison { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };

/// A per-step condition that must hold for the step to be valid.
/// A NaN operand never satisfies the condition.
struct RolePredicate {
  std::string role;
  Comparison comparison = Comparison::Greater;
  double threshold = 0.0;

  bool holds(double value) const;
};

struct ValidityRules {
  /// Any NaN in a mapped role invalidates the step.
  bool treat_missing_invalid = true;
  /// target_power <= 0 invalidates the step.
  bool treat_nonpositive_target_invalid = true;
  std::vector<RolePredicate> extra_predicates;
};

Comparison parse_comparison(const std::string& text);
std::string to_string(Comparison comparison);

/// Parses CSV text. `source` is only used in error messages.
TurbineSeriesSet parse_csv(const std::string& text, const ColumnSchema& schema,
                           const std::string& source = "<memory>");
TurbineSeriesSet load_csv(const std::string& path, const ColumnSchema& schema);

/// Recomputes `valid` from `present` and the rules. Values are untouched.
TurbineSeriesSet flag_invalid(TurbineSeriesSet series, const ValidityRules& rules);

}  // namespace windfc
