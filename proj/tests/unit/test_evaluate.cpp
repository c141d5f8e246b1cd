#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "testutil.hpp"
#include "windfc/error.hpp"
#include "windfc/evaluate.hpp"

using namespace windfc;

namespace {

struct Instance {
  std::vector<double> pred;
  std::vector<double> truth;
  std::vector<std::uint8_t> mask;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1620.0);
  std::bernoulli_distribution keep(0.8);
  Instance x;
  for (std::size_t i = 0; i < n; ++i) {
    x.pred.push_back(u(rng));
    x.truth.push_back(u(rng));
    x.mask.push_back(keep(rng));
  }
  return x;
}

}  // namespace

TEST_CASE("metric examples") {
  const std::vector<double> a{100.0, 200.0};
  const std::vector<std::uint8_t> both{1, 1};
  CHECK(*masked_mae(a, a, both) == 0.0);
  CHECK(*masked_mae(std::vector<double>{100.0, 200.0}, std::vector<double>{-1e9, 150.0},
                    std::vector<std::uint8_t>{0, 1}) == 50.0);
  CHECK(*masked_rmse(std::vector<double>{3.0}, std::vector<double>{0.0}, std::vector<std::uint8_t>{1}) == 3.0);
  CHECK(*masked_rmse(std::vector<double>{3.0, -4.0}, std::vector<double>{0.0, 0.0}, both) ==
        doctest::Approx(3.5355).epsilon(1e-4));
  CHECK_FALSE(masked_mae(a, a, std::vector<std::uint8_t>{0, 0}).has_value());
  CHECK_THROWS_AS(masked_mae(a, std::vector<double>{1.0}, both), Error);
}

TEST_CASE("zero-contribution variant keeps invalid steps in the denominator") {
  const std::vector<double> pred{10.0, 0.0, 0.0, 0.0};
  const std::vector<double> truth{0.0, 0.0, 0.0, 0.0};
  const std::vector<std::uint8_t> mask{1, 0, 0, 0};
  CHECK(*masked_mae(pred, truth, mask, true) == 10.0);
  CHECK(*masked_mae(pred, truth, mask, false) == 2.5);
}

TEST_CASE("score_sample") {
  // turbine 1: constant error 10 -> score 10; turbine 2: constant error 20 -> score 20
  std::map<int, std::vector<double>> preds{{1, {10.0, 10.0}}, {2, {20.0, 20.0}}};
  std::map<int, std::vector<double>> truths{{1, {0.0, 0.0}}, {2, {0.0, 0.0}}};
  std::map<int, std::vector<std::uint8_t>> masks{{1, {1, 1}}, {2, {1, 1}}};
  CHECK(score_sample(preds, truths, masks, {1.0, true}).score == 30.0);
  CHECK(score_sample(truths, truths, masks).score == 0.0);

  auto missing = masks;
  missing.erase(2);
  missing[3] = {1, 1};
  try {
    score_sample(preds, truths, missing);
    FAIL("mismatched turbines accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TurbineSetMismatch);
  }

  auto dead = masks;
  dead[2] = {0, 0};
  const auto s = score_sample(preds, truths, dead, {1.0, true});
  CHECK(s.turbines.size() == 1);
  CHECK(s.score == 10.0);
}

TEST_CASE("score_sample matches recomputation from the metrics") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<int, std::vector<double>> preds;
    std::map<int, std::vector<double>> truths;
    std::map<int, std::vector<std::uint8_t>> masks;
    for (int id : {4, 9, 13}) {
      auto x = random_instance(rng, 288);
      preds[id] = x.pred;
      truths[id] = x.truth;
      masks[id] = x.mask;
    }
    const auto s = score_sample(preds, truths, masks);
    double expected = 0.0;
    for (int id : {4, 9, 13}) {
      expected += (*masked_mae(preds[id], truths[id], masks[id]) + *masked_rmse(preds[id], truths[id], masks[id])) / 2;
    }
    CHECK(s.score == doctest::Approx(expected / 1000.0).epsilon(1e-12));
  }
}

TEST_CASE("persistence baseline") {
  const std::vector<double> input{1.0, 2.0, 500.0};
  const auto p = persistence_forecast(input);
  CHECK(p.size() == 288);
  for (double v : p) CHECK(v == 500.0);
  const std::vector<double> other{9.0, -4.0, 500.0};
  CHECK(persistence_forecast(other) == p);
  const std::vector<double> truth(288, 500.0);
  const std::vector<std::uint8_t> mask(288, 1);
  CHECK(*masked_mae(p, truth, mask) == 0.0);
  CHECK_THROWS_AS(persistence_forecast(std::vector<double>{}), Error);
}

TEST_CASE("aggregation names") {
  CHECK(parse_aggregation("sum") == Aggregation::SumOverSamples);
  CHECK(parse_aggregation("mean") == Aggregation::MeanOverSamples);
  CHECK(to_string(Aggregation::MeanOverSamples) == "mean");
  CHECK_THROWS_AS(parse_aggregation("median"), Error);
  const EvaluateConfig c;
  CHECK(c.n_samples == 195);
  CHECK(c.aggregation == Aggregation::SumOverSamples);
  CHECK(c.unit_divisor == 1000.0);
}

TEST_CASE("report aggregates equal recomputation from sample rows") {
  std::mt19937_64 rng(5);
  std::vector<SampleScore> samples;
  for (int s = 0; s < 7; ++s) {
    std::map<int, std::vector<double>> preds;
    std::map<int, std::vector<double>> truths;
    std::map<int, std::vector<std::uint8_t>> masks;
    for (int id : {1, 2}) {
      auto x = random_instance(rng, 30);
      preds[id] = x.pred;
      truths[id] = x.truth;
      masks[id] = x.mask;
    }
    samples.push_back(score_sample(preds, truths, masks));
  }
  for (auto agg : {Aggregation::SumOverSamples, Aggregation::MeanOverSamples}) {
    EvaluateConfig cfg;
    cfg.aggregation = agg;
    const auto r = build_report("model", samples, std::vector<std::size_t>(7, 0), cfg);
    double total = 0.0;
    for (const auto& row : r.samples) total += row.score;
    const double expected = agg == Aggregation::SumOverSamples ? total : total / 7.0;
    CHECK(r.farm_score == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.rows.size() == 14);
    CHECK(r.per_turbine.size() == 2);

    const std::string csv = report_csv(r);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "sample_id,turbine_id,mae,rmse,score");
    std::size_t all_rows = 0;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      ++lines;
      all_rows += line.find(",ALL,") != std::string::npos;
    }
    CHECK(lines == 14 + 7 + 1);
    CHECK(all_rows == 8);
  }
}

TEST_CASE("sample starts") {
  const WindowSpec w{4, 3, 1};
  const StepRange range{100, 150};
  const auto a = draw_sample_starts(range, w, 20, 2022);
  CHECK(a == draw_sample_starts(range, w, 20, 2022));
  CHECK(a.size() == 20);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 20);
  for (auto s : a) {
    CHECK(s >= range.begin);
    CHECK(s + 7 <= range.end);
  }
  CHECK(draw_sample_starts(range, w, 60, 1).size() == 60);
  CHECK_THROWS_AS(draw_sample_starts({0, 5}, w, 1, 1), Error);
}
