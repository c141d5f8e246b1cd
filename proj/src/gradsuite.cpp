#include "windfc/gradsuite.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <random>

#include "windfc/autodiff/gradcheck.hpp"

namespace windfc {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using Vars = std::vector<Var<double>>;

namespace {

struct Case {
  std::vector<Tensor<double>> inputs;
  ad::ScalarFunction<double> f;
};

Tensor<double> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(shape);
  for (auto& x : t.data()) x = u(rng);
  return t;
}

/// Values bounded away from zero so relu kinks stay out of reach of eps.
Tensor<double> away_from_zero(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::bernoulli_distribution sign(0.5);
  Tensor<double> t(shape);
  for (auto& x : t.data()) x = sign(rng) ? u(rng) : -u(rng);
  return t;
}

/// sum(w * y) with fixed random w, so every output element matters.
Var<double> weighted_sum(const Var<double>& y, const Tensor<double>& w) {
  auto& tape = *y.tape();
  return ad::sum(ad::mul(y, tape.constant(w)));
}

Case make_case(const std::string& op, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  auto d = [&] { return dim(rng); };
  Case c;
  auto wrap = [&](const Shape& out_shape, std::function<Var<double>(const Vars&)> body) {
    const Tensor<double> w = random_tensor(out_shape, rng);
    c.f = [w, body](Tape<double>&, const Vars& in) { return weighted_sum(body(in), w); };
  };

  if (op == "matmul") {
    const std::size_t m = d(), k = d(), n = d();
    c.inputs = {random_tensor({m, k}, rng), random_tensor({k, n}, rng)};
    wrap({m, n}, [](const Vars& in) { return ad::matmul(in[0], in[1]); });
  } else if (op == "batch_matmul") {
    const std::size_t b = d(), m = d(), k = d(), n = d();
    const bool transpose_b = std::bernoulli_distribution(0.5)(rng);
    const bool rank4 = std::bernoulli_distribution(0.5)(rng);
    Shape sa{b, m, k};
    Shape sb = transpose_b ? Shape{b, n, k} : Shape{b, k, n};
    Shape so{b, m, n};
    if (rank4) {
      const std::size_t h = d();
      sa.insert(sa.begin() + 1, h);
      sb.insert(sb.begin() + 1, h);
      so.insert(so.begin() + 1, h);
    }
    c.inputs = {random_tensor(sa, rng), random_tensor(sb, rng)};
    wrap(so, [transpose_b](const Vars& in) { return ad::batch_matmul(in[0], in[1], transpose_b); });
  } else if (op == "affine") {
    const std::size_t b = d(), t = d(), i = d(), o = d();
    c.inputs = {random_tensor({b, t, i}, rng), random_tensor({i, o}, rng), random_tensor({o}, rng)};
    wrap({b, t, o}, [](const Vars& in) { return ad::affine(in[0], in[1], in[2]); });
  } else if (op == "add") {
    const Shape s{d(), d(), d()};
    c.inputs = {random_tensor(s, rng), random_tensor(s, rng)};
    wrap(s, [](const Vars& in) { return ad::add(in[0], in[1]); });
  } else if (op == "mul") {
    const Shape s{d(), d()};
    c.inputs = {random_tensor(s, rng), random_tensor(s, rng)};
    wrap(s, [](const Vars& in) { return ad::mul(in[0], in[1]); });
  } else if (op == "scale") {
    const Shape s{d(), d()};
    const double k = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
    c.inputs = {random_tensor(s, rng)};
    wrap(s, [k](const Vars& in) { return ad::scale(in[0], k); });
  } else if (op == "relu") {
    const Shape s{d(), d(), d()};
    c.inputs = {away_from_zero(s, rng)};
    wrap(s, [](const Vars& in) { return ad::relu(in[0]); });
  } else if (op == "reshape") {
    const std::size_t a = d(), b = d(), e = d();
    c.inputs = {random_tensor({a, b, e}, rng)};
    wrap({a * b, e}, [a, b, e](const Vars& in) { return ad::reshape(in[0], Shape{a * b, e}); });
  } else if (op == "swap_axes12") {
    const std::size_t a = d(), b = d(), e = d(), f = d();
    c.inputs = {random_tensor({a, b, e, f}, rng)};
    wrap({a, e, b, f}, [](const Vars& in) { return ad::swap_axes12(in[0]); });
  } else if (op == "sum") {
    // the weighting happens before the reduction here
    const Shape s{d(), d()};
    const Tensor<double> w = random_tensor(s, rng);
    c.inputs = {random_tensor(s, rng)};
    c.f = [w](Tape<double>& tape, const Vars& in) {
      auto total = ad::sum(ad::mul(in[0], tape.constant(w)));
      return ad::mul(total, total);
    };
  } else if (op == "softmax_lastaxis") {
    const Shape s{d(), d(), d() + 1};
    c.inputs = {random_tensor(s, rng, -2.0, 2.0)};
    wrap(s, [](const Vars& in) { return ad::softmax_lastaxis(in[0]); });
  } else if (op == "layer_norm") {
    const std::size_t n = d() + 1;
    const Shape s{d(), d(), n};
    c.inputs = {random_tensor(s, rng), random_tensor({n}, rng, 0.5, 1.5), random_tensor({n}, rng)};
    wrap(s, [](const Vars& in) { return ad::layer_norm(in[0], in[1], in[2], 1e-5); });
  } else if (op == "dropout") {
    const Shape s{d(), d()};
    const std::uint64_t mask_seed = rng();
    const double rate = std::uniform_real_distribution<double>(0.1, 0.6)(rng);
    c.inputs = {random_tensor(s, rng)};
    wrap(s, [mask_seed, rate](const Vars& in) {
      // reseeded per call so every evaluation draws the same mask
      std::mt19937_64 mask_rng(mask_seed);
      return ad::dropout(in[0], rate, true, mask_rng);
    });
  } else if (op == "rmse_loss") {
    const Shape s{d(), d()};
    const Tensor<double> target = random_tensor(s, rng, -2.0, 2.0);
    std::vector<std::uint8_t> mask(target.size());
    std::bernoulli_distribution keep(0.7);
    for (auto& m : mask) m = keep(rng);
    mask[0] = 1;
    c.inputs = {random_tensor(s, rng, -2.0, 2.0)};
    c.f = [target, mask](Tape<double>&, const Vars& in) { return ad::rmse_loss(in[0], target, mask, 1e-8); };
  }
  return c;
}

PrimitiveCheck check_model(const GradSuiteOptions& options) {
  const ForecasterConfig cfg = grad_check_model_config();
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t batch = 3;
  const ForecasterParams<double> params = init_params<double>(cfg, options.seed);
  const Tensor<double> x = random_tensor({batch, cfg.input_length, cfg.n_features}, rng, 0.0, 1.0);
  const Tensor<double> target = random_tensor({batch, cfg.output_length}, rng, -1.0, 1.0);
  std::vector<std::uint8_t> mask(target.size(), 1);
  mask[1] = 0;

  std::vector<Tensor<double>> inputs;
  for (const auto& e : params.entries) inputs.push_back(e.tensor);
  ad::ScalarFunction<double> f = [&](Tape<double>& tape, const Vars& in) {
    BoundParams<double> bound;
    for (std::size_t i = 0; i < in.size(); ++i) {
      bound.names.push_back(params.entries[i].name);
      bound.vars.push_back(in[i]);
    }
    std::mt19937_64 unused(0);
    auto pred = forward(bound, cfg, tape.constant(x), false, unused);
    return ad::rmse_loss(pred, target, mask, 1e-8);
  };
  const auto r = ad::grad_check<double>(f, inputs, options.eps, options.abs_floor);
  PrimitiveCheck out{"full_model", 1, r.elements_checked, r.max_rel_error, options.model_tolerance, false};
  out.passed = r.max_rel_error < options.model_tolerance;
  return out;
}

}  // namespace

bool GradSuiteReport::all_passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::vector<std::string> grad_suite_ops() {
  return {"matmul", "batch_matmul", "affine",  "add",         "mul",        "scale",   "relu",
          "reshape", "swap_axes12", "sum",     "softmax_lastaxis", "layer_norm", "dropout", "rmse_loss"};
}

ForecasterConfig grad_check_model_config() {
  ForecasterConfig cfg;
  cfg.input_length = 8;
  cfg.output_length = 8;
  cfg.n_features = 2;
  cfg.n_encoder_layers = 1;
  cfg.attn_hidden = 4;
  cfg.n_heads = 2;
  cfg.ffn_hidden = 4;
  cfg.dense1 = 8;
  cfg.dense2 = 8;
  cfg.dense3 = 8;
  cfg.attn_dropout = cfg.ffn_dropout = cfg.dense1_dropout = cfg.dense2_dropout = 0.0;
  return cfg;
}

GradSuiteReport run_grad_suite(const GradSuiteOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  GradSuiteReport report;
  const auto ops = grad_suite_ops();
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const std::string& op = ops[k];
    PrimitiveCheck check{op, options.trials, 0, 0.0,
                         op == "layer_norm" ? options.layer_norm_tolerance : options.tolerance, false};
    std::mt19937_64 rng(options.seed + 7919 * (k + 1));
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
      const Case c = make_case(op, rng);
      const auto r = ad::grad_check<double>(c.f, c.inputs, options.eps, options.abs_floor);
      check.elements += r.elements_checked;
      check.max_rel_error = std::max(check.max_rel_error, r.max_rel_error);
    }
    check.passed = check.max_rel_error < check.tolerance;
    report.checks.push_back(check);
  }
  if (options.include_model) report.checks.push_back(check_model(options));
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace windfc
