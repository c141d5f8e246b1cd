#include "windfc/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "windfc/error.hpp"

namespace windfc {

void PostprocessConfig::validate() const {
  if (!(boost_factor >= 1.0)) throw Error(ErrorCode::ConfigError, "postprocess.boost_factor must be >= 1");
  if (!(clamp_max > clamp_min)) throw Error(ErrorCode::ConfigError, "postprocess.clamp_max must exceed clamp_min");
  if (!std::isfinite(multiplier) || multiplier < 0.0) {
    throw Error(ErrorCode::ConfigError, "postprocess.multiplier must be finite and >= 0");
  }
}

std::vector<double> slot_means(const TurbineSeriesSet& series, StepRange range) {
  if (range.end > series.n_steps) throw Error(ErrorCode::InvalidArgument, "profile range exceeds series");
  if (range.size() < static_cast<std::size_t>(kRecordsPerDay)) {
    throw Error(ErrorCode::RangeTooShort, "daily profile needs at least one full day");
  }
  const std::size_t target = series.role_index(roles::kTargetPower);
  std::vector<double> sum(kRecordsPerDay, 0.0);
  std::vector<std::size_t> count(kRecordsPerDay, 0);
  for (std::size_t t = 0; t < series.n_turbines(); ++t) {
    const auto& power = series.values[t][target];
    const auto& valid = series.valid[t];
    for (std::size_t s = range.begin; s < range.end; ++s) {
      if (!valid[s]) continue;
      const std::size_t slot = s % kRecordsPerDay;
      sum[slot] += power[s];
      ++count[slot];
    }
  }
  std::vector<double> means(kRecordsPerDay);
  for (std::size_t slot = 0; slot < means.size(); ++slot) {
    if (count[slot] == 0) throw Error(ErrorCode::EmptySlot, "slot " + std::to_string(slot));
    means[slot] = sum[slot] / static_cast<double>(count[slot]);
  }
  return means;
}

std::vector<double> scale_profile(std::span<const double> means, const PostprocessConfig& config) {
  if (means.empty()) throw Error(ErrorCode::InvalidArgument, "empty slot means");
  const auto [lo_it, hi_it] = std::minmax_element(means.begin(), means.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(means.size());
  for (std::size_t s = 0; s < means.size(); ++s) {
    out[s] = hi == lo ? 0.0 : (means[s] - lo) / (hi - lo) * config.multiplier;
  }
  if (config.center_profile) {
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
    for (double& v : out) v -= mean;
  }
  return out;
}

DailyProfile fit_daily_profile(const TurbineSeriesSet& series, StepRange range, const PostprocessConfig& config) {
  config.validate();
  DailyProfile profile;
  profile.multiplier = config.multiplier;
  profile.source_range = range;
  profile.values = scale_profile(slot_means(series, range), config);
  return profile;
}

std::vector<double> apply_daily_fluctuation(std::span<const double> pred, int start_slot, const DailyProfile& profile,
                                            const PostprocessConfig& config) {
  if (!profile.fitted()) throw Error(ErrorCode::ProfileNotFitted, "daily profile has no values");
  if (start_slot < 0 || start_slot >= kRecordsPerDay) {
    throw Error(ErrorCode::InvalidArgument, "start_slot " + std::to_string(start_slot) + " out of [0, 144)");
  }
  std::vector<double> out(pred.size());
  const std::size_t period = profile.values.size();
  for (std::size_t t = 0; t < pred.size(); ++t) {
    double v = pred[t] + profile.values[(static_cast<std::size_t>(start_slot) + t) % period];
    if (config.boost_enabled && v > config.boost_threshold) v *= config.boost_factor;
    if (config.clamp_enabled) v = std::clamp(v, config.clamp_min, config.clamp_max);
    out[t] = v;
  }
  return out;
}

DailyProfile rotate_profile(const DailyProfile& profile, int k) {
  if (!profile.fitted()) throw Error(ErrorCode::ProfileNotFitted, "daily profile has no values");
  DailyProfile out = profile;
  const auto n = static_cast<long>(profile.values.size());
  for (long s = 0; s < n; ++s) out.values[static_cast<std::size_t>(s)] = profile.values[static_cast<std::size_t>(((s + k) % n + n) % n)];
  return out;
}

int start_slot_of(std::size_t first_target_step, int records_per_day) {
  return static_cast<int>(first_target_step % static_cast<std::size_t>(records_per_day));
}

std::string DailyProfile::to_text() const {
  if (!fitted()) throw Error(ErrorCode::ProfileNotFitted, "daily profile has no values");
  std::string out;
  char buf[96];
  std::snprintf(buf, sizeof buf, "# multiplier %.17g\n", multiplier);
  out += buf;
  std::snprintf(buf, sizeof buf, "# range %zu %zu\n", source_range.begin, source_range.end);
  out += buf;
  for (std::size_t s = 0; s < values.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%zu %.17g\n", s, values[s]);
    out += buf;
  }
  return out;
}

DailyProfile DailyProfile::from_text(const std::string& text) {
  DailyProfile p;
  p.values.assign(kRecordsPerDay, 0.0);
  std::vector<std::uint8_t> seen(kRecordsPerDay, 0);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string hash;
      std::string key;
      fields >> hash >> key;
      if (key == "multiplier") {
        std::string v;
        fields >> v;
        p.multiplier = std::strtod(v.c_str(), nullptr);
      } else if (key == "range") {
        fields >> p.source_range.begin >> p.source_range.end;
      }
      continue;
    }
    std::size_t slot = 0;
    std::string v;
    if (!(fields >> slot >> v) || slot >= seen.size()) throw Error(ErrorCode::IoError, "bad profile line: " + line);
    p.values[slot] = std::strtod(v.c_str(), nullptr);
    seen[slot] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 1) != kRecordsPerDay) {
    throw Error(ErrorCode::IoError, "profile file must list all 144 slots");
  }
  return p;
}

void DailyProfile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << to_text();
}

DailyProfile DailyProfile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

}  // namespace windfc
