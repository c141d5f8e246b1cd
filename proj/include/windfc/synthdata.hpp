#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "windfc/dataio.hpp"

namespace windfc {

/// Monotone piecewise-linear wind speed (m/s) to power (kW) map, flat
/// outside the knots.
struct PowerCurve {
  std::vector<std::pair<double, double>> knots{{0.0, 0.0}, {3.0, 0.0}, {12.0, 1500.0}};

  double rated_power() const { return knots.empty() ? 0.0 : knots.back().second; }
  double operator()(double wind_speed) const;
  void validate() const;
};

struct SynthSpec {
  std::size_t n_turbines = 2;
  std::size_t n_days = 20;
  std::uint64_t seed = 2022;
  double daily_amplitude = 150.0;  // kW, added to the curve output
  double noise_std = 25.0;         // kW, white noise on power
  PowerCurve power_curve;
  double invalid_fraction = 0.0;

  double wind_mean = 8.0;            // m/s
  double wind_daily_amplitude = 3.0; // m/s
  double wind_noise_std = 0.3;       // m/s, AR(1) innovation
  double wind_ar = 0.98;
  double direction_step_std = 2.0;   // degrees per step
  double daily_phase = 0.0;          // radians

  void validate() const;
};

/// Noise-free per-slot power implied by the spec (144 values, kW).
std::vector<double> daily_curve(const SynthSpec& spec);

/// CSV text in the SDWPF column layout, bit-identical for a given spec.
std::string generate_csv(const SynthSpec& spec);
void write_synth_csv(const std::string& path, const SynthSpec& spec);

/// generate_csv parsed back with the default schema (not yet flagged).
TurbineSeriesSet generate(const SynthSpec& spec);

}  // namespace windfc
