#include "windfc/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "windfc/error.hpp"

namespace windfc {

double PowerCurve::operator()(double wind_speed) const {
  if (knots.empty()) return 0.0;
  if (wind_speed <= knots.front().first) return knots.front().second;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const auto [x1, y1] = knots[i];
    if (wind_speed <= x1) {
      const auto [x0, y0] = knots[i - 1];
      return y0 + (y1 - y0) * (wind_speed - x0) / (x1 - x0);
    }
  }
  return knots.back().second;
}

void PowerCurve::validate() const {
  if (knots.size() < 2) throw Error(ErrorCode::InvalidArgument, "power curve needs at least two knots");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].first > knots[i - 1].first) || knots[i].second < knots[i - 1].second) {
      throw Error(ErrorCode::InvalidArgument, "power curve knots must increase");
    }
  }
  if (knots.front().second < 0.0 || rated_power() > 1620.0) {
    throw Error(ErrorCode::InvalidArgument, "power curve must stay within [0, 1620] kW");
  }
}

void SynthSpec::validate() const {
  power_curve.validate();
  if (n_turbines == 0 || n_days == 0) throw Error(ErrorCode::InvalidArgument, "synth spec needs turbines and days");
  if (!(invalid_fraction >= 0.0 && invalid_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid_fraction must be in [0, 1)");
  }
  if (noise_std < 0.0 || wind_noise_std < 0.0 || direction_step_std < 0.0 || daily_amplitude < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "noise levels and amplitudes must be non-negative");
  }
  if (!(std::abs(wind_ar) < 1.0)) throw Error(ErrorCode::InvalidArgument, "wind_ar must be in (-1, 1)");
}

namespace {

double daily_wave(const SynthSpec& spec, int slot) {
  return std::sin(2.0 * std::numbers::pi * slot / kRecordsPerDay + spec.daily_phase);
}

}  // namespace

std::vector<double> daily_curve(const SynthSpec& spec) {
  spec.validate();
  std::vector<double> curve(kRecordsPerDay);
  const double rated = spec.power_curve.rated_power();
  for (int slot = 0; slot < kRecordsPerDay; ++slot) {
    const double w = daily_wave(spec, slot);
    const double p = spec.power_curve(spec.wind_mean + spec.wind_daily_amplitude * w) + spec.daily_amplitude * w;
    curve[slot] = std::clamp(p, 1.0, rated);
  }
  return curve;
}

std::string generate_csv(const SynthSpec& spec) {
  spec.validate();
  const double rated = spec.power_curve.rated_power();
  std::string out = "TurbID,Day,Tmstamp,Wspd,Wdir,Etmp,Itmp,Ndir,Pab1,Pab2,Pab3,Prtv,Patv\n";
  out.reserve(out.size() + spec.n_turbines * spec.n_days * kRecordsPerDay * 80);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double stationary = spec.wind_noise_std / std::sqrt(1.0 - spec.wind_ar * spec.wind_ar);

  char buf[256];
  char field[9][24];
  for (std::size_t t = 0; t < spec.n_turbines; ++t) {
    double ar = stationary * gauss(rng);
    double direction = 360.0 * unit(rng);
    double nacelle = direction;
    for (std::size_t day = 1; day <= spec.n_days; ++day) {
      for (int slot = 0; slot < kRecordsPerDay; ++slot) {
        const double w = daily_wave(spec, slot);
        ar = spec.wind_ar * ar + spec.wind_noise_std * gauss(rng);
        const double speed = std::max(0.0, spec.wind_mean + spec.wind_daily_amplitude * w + ar);
        direction = std::fmod(direction + spec.direction_step_std * gauss(rng) + 360.0, 360.0);
        nacelle = std::fmod(nacelle + 0.1 * (direction - nacelle) + 360.0, 360.0);
        double power = spec.power_curve(speed) + spec.daily_amplitude * w + spec.noise_std * gauss(rng);
        // 1 kW floor keeps naturally generated rows valid
        power = std::clamp(power, 1.0, rated);
        const double ext_temp = 20.0 + 5.0 * w + 0.5 * gauss(rng);
        const double int_temp = 30.0 + 0.5 * gauss(rng);
        const double pitch = speed > 12.0 ? 2.0 * (speed - 12.0) : 0.0;
        const double reactive = 0.05 * power;

        const bool inject = spec.invalid_fraction > 0.0 && unit(rng) < spec.invalid_fraction;
        const int mode = inject ? static_cast<int>(unit(rng) * 4.0) : -1;  // 0: zero target, 1-3: blank cell
        std::snprintf(field[0], sizeof field[0], "%.2f", speed);
        std::snprintf(field[1], sizeof field[1], "%.2f", direction);
        std::snprintf(field[2], sizeof field[2], "%.2f", ext_temp);
        std::snprintf(field[3], sizeof field[3], "%.2f", int_temp);
        std::snprintf(field[4], sizeof field[4], "%.2f", nacelle);
        std::snprintf(field[5], sizeof field[5], "%.2f", pitch);
        std::snprintf(field[6], sizeof field[6], "%.2f", pitch);
        std::snprintf(field[7], sizeof field[7], "%.2f", reactive);
        std::snprintf(field[8], sizeof field[8], "%.2f", power);
        if (mode == 0) std::snprintf(field[8], sizeof field[8], "0.00");
        if (mode == 1) field[0][0] = '\0';
        if (mode == 2) field[1][0] = '\0';
        if (mode == 3) field[8][0] = '\0';

        std::snprintf(buf, sizeof buf, "%zu,%zu,%02d:%02d,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s\n", t + 1, day,
                      slot / 6, (slot % 6) * 10, field[0], field[1], field[2], field[3], field[4], field[5],
                      field[6], field[6], field[7], field[8]);
        out += buf;
      }
    }
  }
  return out;
}

void write_synth_csv(const std::string& path, const SynthSpec& spec) {
  const std::string text = generate_csv(spec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

TurbineSeriesSet generate(const SynthSpec& spec) { return parse_csv(generate_csv(spec), ColumnSchema{}, "<synth>"); }

}  // namespace windfc
