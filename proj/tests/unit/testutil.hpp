#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "windfc/dataio.hpp"

namespace testutil {

inline std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

/// Schema with only the three roles every pipeline needs.
inline windfc::ColumnSchema small_schema() {
  windfc::ColumnSchema s;
  s.role_map = {{windfc::roles::kWindSpeed, "Wspd"},
                {windfc::roles::kWindDirection, "Wdir"},
                {windfc::roles::kTargetPower, "Patv"}};
  return s;
}

/// Builds a flagged-free series directly: value(turbine, role, step).
inline windfc::TurbineSeriesSet make_series(std::size_t n_turbines, std::size_t n_days,
                                            const std::function<double(std::size_t, std::size_t, std::size_t)>& value) {
  windfc::TurbineSeriesSet s;
  s.roles = {windfc::roles::kTargetPower, windfc::roles::kWindDirection, windfc::roles::kWindSpeed};
  s.n_steps = n_days * windfc::kRecordsPerDay;
  for (std::size_t t = 0; t < n_turbines; ++t) {
    s.turbine_ids.push_back(static_cast<int>(t + 1));
    s.values.emplace_back();
    for (std::size_t r = 0; r < s.roles.size(); ++r) {
      std::vector<double> column(s.n_steps);
      for (std::size_t i = 0; i < s.n_steps; ++i) column[i] = value(t, r, i);
      s.values.back().push_back(std::move(column));
    }
    std::vector<std::uint8_t> present(s.n_steps);
    for (std::size_t i = 0; i < s.n_steps; ++i) present[i] = std::isnan(s.values.back()[0][i]) ? 0 : 1;
    s.present.push_back(present);
    s.valid.push_back(present);
  }
  return s;
}

inline std::string hhmm(int slot) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", slot / 6, (slot % 6) * 10);
  return buf;
}

}  // namespace testutil
