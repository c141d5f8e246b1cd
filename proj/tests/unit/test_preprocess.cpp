#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "testutil.hpp"
#include "windfc/error.hpp"
#include "windfc/preprocess.hpp"

using namespace windfc;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TurbineSeriesSet one_column(const std::vector<double>& speeds) {
  TurbineSeriesSet s;
  s.turbine_ids = {1};
  s.roles = {roles::kTargetPower, roles::kWindSpeed};
  s.n_steps = speeds.size();
  s.values = {{std::vector<double>(speeds.size(), 100.0), speeds}};
  s.present = {std::vector<std::uint8_t>(speeds.size(), 1)};
  s.valid = s.present;
  return s;
}

// Carries the last seen value; leading gaps take the first seen value.
std::vector<double> scan_oracle(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  double first = kNaN;
  for (double v : x) {
    if (!std::isnan(v)) {
      first = v;
      break;
    }
  }
  double last = first;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isnan(x[i])) last = x[i];
    out[i] = last;
  }
  return out;
}

}  // namespace

TEST_CASE("forward fill examples") {
  auto filled = forward_fill(one_column({1.0, kNaN, kNaN, 4.0}));
  CHECK(testutil::vec(filled.series(0, roles::kWindSpeed)) == std::vector<double>{1.0, 1.0, 1.0, 4.0});
  filled = forward_fill(one_column({kNaN, 2.0}));
  CHECK(testutil::vec(filled.series(0, roles::kWindSpeed)) == std::vector<double>{2.0, 2.0});
  CHECK_THROWS_AS(forward_fill(one_column({kNaN, kNaN})), Error);
}

TEST_CASE("forward fill matches the scan oracle on random gappy series") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::bernoulli_distribution gap(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(50);
    for (auto& v : x) v = gap(rng) ? kNaN : u(rng);
    x[rng() % 50] = 1.5;  // at least one observation
    const auto filled = forward_fill(one_column(x));
    CHECK(testutil::vec(filled.series(0, roles::kWindSpeed)) == scan_oracle(x));
  }
}

TEST_CASE("forward fill replaces invalid-but-present values unless disabled") {
  auto s = one_column({1.0, 2.0, 3.0});
  s.valid[0][1] = 0;
  CHECK(testutil::vec(forward_fill(s).series(0, roles::kWindSpeed)) == std::vector<double>{1.0, 1.0, 3.0});
  CHECK(testutil::vec(forward_fill(s, FillOptions{false}).series(0, roles::kWindSpeed)) == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("scaler fit, scale and degenerate roles") {
  const auto s = one_column({2.0, 4.0, 6.0});
  const auto scaler = fit_scaler(s, {roles::kWindSpeed}, {0, 3});
  CHECK(scaler.bounds.at(roles::kWindSpeed).min == 2.0);
  CHECK(scaler.bounds.at(roles::kWindSpeed).max == 6.0);
  CHECK(scaler.scale(roles::kWindSpeed, 4.0) == 0.5);

  const auto flat = fit_scaler(one_column({5.0, 5.0, 5.0}), {roles::kWindSpeed}, {0, 3});
  CHECK(flat.bounds.at(roles::kWindSpeed).min == 5.0);
  CHECK(flat.bounds.at(roles::kWindSpeed).max == 5.0);
  CHECK(flat.scale(roles::kWindSpeed, 5.0) == 0.0);

  CHECK_THROWS_AS(fit_scaler(s, {roles::kTargetPower}, {0, 3}), Error);
  CHECK_THROWS_AS(scaler.scale("pitch", 1.0), Error);
}

TEST_CASE("scaler only sees the fit range") {
  const auto s = one_column({1.0, 2.0, 3.0, 100.0});
  const auto scaler = fit_scaler(s, {roles::kWindSpeed}, {0, 3});
  CHECK(scaler.bounds.at(roles::kWindSpeed).max == 3.0);
}

TEST_CASE("transform round-trips and leaves the target column alone") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const auto s = testutil::make_series(3, 2, [&](std::size_t, std::size_t r, std::size_t) {
    return r == 0 ? u(rng) * 20.0 : u(rng);
  });
  const auto scaler = fit_scaler(s, default_feature_roles(), {0, s.n_steps});
  const auto scaled = transform(s, scaler);
  const auto back = inverse_transform(scaled, scaler);
  for (std::size_t t = 0; t < s.n_turbines(); ++t) {
    CHECK(testutil::vec(scaled.series(t, roles::kTargetPower)) == testutil::vec(s.series(t, roles::kTargetPower)));
    for (const auto& role : default_feature_roles()) {
      const auto& a = s.series(t, role);
      const auto& b = back.series(t, role);
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(a[i])));
        CHECK(scaled.series(t, role)[i] >= 0.0);
        CHECK(scaled.series(t, role)[i] <= 1.0);
      }
    }
  }
}

TEST_CASE("scaler text round-trip is exact") {
  MinMaxScaler s;
  s.bounds["wind_speed"] = {0.1, 1.0 / 3.0};
  s.bounds["wind_direction"] = {-180.0, 179.99};
  const auto back = MinMaxScaler::from_text(s.to_text());
  CHECK(back.bounds.at("wind_speed").min == 0.1);
  CHECK(back.bounds.at("wind_speed").max == 1.0 / 3.0);
  CHECK(back.bounds.at("wind_direction").max == 179.99);
}

TEST_CASE("window counts") {
  const WindowSpec spec;
  CHECK(window_count(576, spec) == 1);
  CHECK(window_count(720, spec) == 145);
  CHECK(window_count(575, spec) == 0);
  CHECK(default_feature_roles().size() == 2);
}

TEST_CASE("window count matches brute-force enumeration") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    WindowSpec spec{1 + rng() % 20, 1 + rng() % 20, 1 + rng() % 7};
    const std::size_t L = rng() % 80;
    std::size_t brute = 0;
    for (std::size_t start = 0; start + spec.input_length + spec.output_length <= L; start += spec.stride) ++brute;
    CHECK(window_count(L, spec) == brute);
  }
}

TEST_CASE("windows carry features, targets, masks and slots") {
  const auto s = testutil::make_series(2, 3, [](std::size_t t, std::size_t r, std::size_t i) {
    return 1000.0 * static_cast<double>(t) + 10.0 * static_cast<double>(i) + static_cast<double>(r);
  });
  WindowSpec spec{4, 3, 5};
  auto raw = s;
  raw.valid[1][10] = 0;
  const auto refs = enumerate_windows(s, spec, {100, 130});
  CHECK(refs.size() == 2 * window_count(30, spec));
  const auto batch = gather_windows(s, raw, refs, spec, default_feature_roles());
  CHECK(batch.inputs.size() == refs.size() * 4 * 2);
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto [t, begin] = refs[k];
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(batch.inputs[(k * 4 + j) * 2 + 0] == s.series(t, roles::kWindSpeed)[begin + j]);
      CHECK(batch.inputs[(k * 4 + j) * 2 + 1] == s.series(t, roles::kWindDirection)[begin + j]);
      CHECK(batch.input_power[k * 4 + j] == s.series(t, roles::kTargetPower)[begin + j]);
    }
    for (std::size_t h = 0; h < 3; ++h) {
      CHECK(batch.targets[k * 3 + h] == s.series(t, roles::kTargetPower)[begin + 4 + h]);
      CHECK(batch.target_valid[k * 3 + h] == raw.valid[t][begin + 4 + h]);
    }
    CHECK(batch.start_slot[k] == static_cast<int>((begin + 4) % 144));
    CHECK(batch.first_target_step[k] == begin + 4);
    CHECK(batch.turbine_id[k] == s.turbine_ids[t]);
  }
  CHECK_THROWS_AS(enumerate_windows(s, spec, {100, 105}), Error);
}

TEST_CASE("temporal split") {
  const auto s245 = testutil::make_series(1, 245, [](auto, auto, auto) { return 1.0; });
  const auto [train, validation] = temporal_split(s245);
  CHECK(train == StepRange{0, 181 * 144});
  CHECK(validation == StepRange{230 * 144, 245 * 144});

  const auto s20 = testutil::make_series(1, 20, [](auto, auto, auto) { return 1.0; });
  const auto [a, b] = temporal_split(s20, SplitDays{1, 10, 11, 12});
  CHECK(a == StepRange{0, 10 * 144});
  CHECK(b == StepRange{10 * 144, 12 * 144});

  const auto s100 = testutil::make_series(1, 100, [](auto, auto, auto) { return 1.0; });
  try {
    temporal_split(s100);
    FAIL("short series accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientDays);
  }
}
