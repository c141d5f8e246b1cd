#include <cmath>
#include <random>

#include "doctest.h"
#include "windfc/autodiff/gradcheck.hpp"
#include "windfc/autodiff/ops.hpp"
#include "windfc/error.hpp"

using namespace windfc;
using namespace windfc::ad;

namespace {

Tensor<double> random_tensor(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<double> t(shape);
  for (auto& x : t.data()) x = u(rng);
  return t;
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor<double> t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK_THROWS_AS(Tensor<double>({2, 2}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(Tensor<double>({2, 0}), Error);
  CHECK_THROWS_AS(t.item(), Error);
  CHECK(Tensor<double>::scalar(4.0).item() == 4.0);
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
}

TEST_CASE("matmul forward") {
  std::mt19937_64 rng(1);
  Tape<double> tape;
  const auto x = random_tensor({3, 4}, rng);
  Tensor<double> eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  CHECK(matmul(tape.constant(eye), tape.constant(x)).value() == x);
  CHECK(matmul(tape.constant(Tensor<double>({3, 3})), tape.constant(x)).value() == Tensor<double>({3, 4}));
  CHECK_THROWS_AS(matmul(tape.constant(x), tape.constant(x)), Error);
}

TEST_CASE("matmul gradient of sum matches finite differences") {
  std::mt19937_64 rng(2);
  ScalarFunction<double> f = [](Tape<double>&, const std::vector<Var<double>>& in) {
    return sum(matmul(in[0], in[1]));
  };
  const auto r = grad_check<double>(f, {random_tensor({2, 3}, rng), random_tensor({3, 2}, rng)}, 1e-5);
  CHECK(r.max_rel_error < 1e-6);
  CHECK(r.elements_checked == 12);
}

TEST_CASE("affine identity and bias gradient") {
  std::mt19937_64 rng(3);
  Tape<double> tape;
  const auto x = random_tensor({4, 3}, rng);
  Tensor<double> eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  CHECK(affine(tape.constant(x), tape.constant(eye), tape.constant(Tensor<double>({3}))).value() == x);

  Tape<double> t2;
  auto xv = t2.constant(random_tensor({4, 3}, rng));
  auto w = t2.leaf(random_tensor({3, 2}, rng));
  auto b = t2.leaf(Tensor<double>({2}));
  const auto upstream = random_tensor({4, 2}, rng);
  auto loss = sum(mul(affine(xv, w, b), t2.constant(upstream)));
  const auto grads = t2.backward(loss);
  const auto gb = grads.at(b);
  for (std::size_t j = 0; j < 2; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < 4; ++i) col += upstream[i * 2 + j];
    CHECK(gb[j] == doctest::Approx(col).epsilon(1e-12));
  }

  ScalarFunction<double> f = [](Tape<double>&, const std::vector<Var<double>>& in) {
    auto y = affine(in[0], in[1], in[2]);
    return sum(mul(y, y));
  };
  const auto r =
      grad_check<double>(f, {random_tensor({4, 3}, rng), random_tensor({3, 2}, rng), random_tensor({2}, rng)}, 1e-5);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("softmax properties") {
  Tape<double> tape;
  auto y = softmax_lastaxis(tape.constant(Tensor<double>({4}, 0.7)));
  for (double v : y.value().data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  std::mt19937_64 rng(4);
  const auto x = random_tensor({3, 5}, rng);
  auto shifted = x;
  for (auto& v : shifted.data()) v += 3.0;
  const auto a = softmax_lastaxis(tape.constant(x)).value();
  const auto b = softmax_lastaxis(tape.constant(shifted)).value();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("layer norm values") {
  Tape<double> tape;
  auto gamma = tape.constant(Tensor<double>({3}, 1.0));
  auto beta = tape.constant(Tensor<double>({3}, 0.0));
  const auto y = layer_norm(tape.constant(Tensor<double>({1, 3}, {1.0, 2.0, 3.0})), gamma, beta, 1e-12).value();
  const double expected = 1.0 / std::sqrt(2.0 / 3.0);
  CHECK(y[0] == doctest::Approx(-expected).epsilon(1e-9));
  CHECK(std::abs(y[1]) < 1e-12);
  CHECK(y[2] == doctest::Approx(expected).epsilon(1e-9));
  CHECK(y[2] == doctest::Approx(1.22474).epsilon(1e-5));

  const auto flat = layer_norm(tape.constant(Tensor<double>({2, 3}, 5.0)), gamma, beta, 1e-5).value();
  for (double v : flat.data()) CHECK(v == 0.0);
}

TEST_CASE("dropout") {
  std::mt19937_64 rng(9);
  Tape<double> tape;
  const auto x = random_tensor({10, 10}, rng);
  auto xv = tape.constant(x);
  CHECK(dropout(xv, 0.0, true, rng).value() == x);
  CHECK(dropout(xv, 0.5, false, rng).value() == x);

  const std::size_t n = 100000;
  Tape<double> t2;
  std::mt19937_64 drng(123);
  const auto y = dropout(t2.constant(Tensor<double>({n}, 1.0)), 0.25, true, drng).value();
  double mean = 0.0;
  std::size_t survivors = 0;
  for (double v : y.data()) {
    mean += v;
    survivors += v != 0.0;
  }
  mean /= static_cast<double>(n);
  const double p = 0.75;
  const double sigma_frac = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(static_cast<double>(survivors) / n - p) < 3 * sigma_frac);
  CHECK(std::abs(mean - 1.0) < 3 * sigma_frac / p);
}

TEST_CASE("elementwise primitives") {
  Tape<double> tape;
  const auto r = relu(tape.constant(Tensor<double>({2}, {-1.0, 2.0}))).value();
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 2.0);
  std::mt19937_64 rng(5);
  const auto x = random_tensor({3, 2}, rng);
  CHECK(add(tape.constant(x), tape.constant(Tensor<double>({3, 2}))).value() == x);
  CHECK_THROWS_AS(add(tape.constant(x), tape.constant(Tensor<double>({2, 3}))), Error);
}

TEST_CASE("swap_axes12 permutes the middle axes") {
  std::mt19937_64 rng(6);
  Tape<double> tape;
  const auto x = random_tensor({2, 3, 4, 5}, rng);
  const auto y = swap_axes12(tape.constant(x)).value();
  CHECK(y.shape() == Shape{2, 4, 3, 5});
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t d = 0; d < 5; ++d) CHECK(y[((a * 4 + c) * 3 + b) * 5 + d] == x[((a * 3 + b) * 4 + c) * 5 + d]);
}

TEST_CASE("rmse loss") {
  Tape<double> tape;
  const Tensor<double> target({2}, {1.0, 1.0});
  std::vector<std::uint8_t> mask{1, 1};
  auto pred = tape.leaf(Tensor<double>({2}, {4.0, -3.0}));
  CHECK(rmse_loss(pred, target, mask).value().item() == doctest::Approx(std::sqrt(12.5)).epsilon(1e-9));
  CHECK(std::sqrt(12.5) == doctest::Approx(3.5355).epsilon(1e-4));

  auto same = tape.leaf(target);
  CHECK(rmse_loss(same, target, mask, 1e-8).value().item() <= 1e-4);

  std::vector<std::uint8_t> none{0, 0};
  try {
    rmse_loss(pred, target, none);
    FAIL("empty mask accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMask);
  }

  Tape<double> t2;
  auto p2 = t2.leaf(Tensor<double>({3}, {5.0, 100.0, -7.0}));
  std::vector<std::uint8_t> partial{1, 0, 1};
  const auto g = t2.backward(rmse_loss(p2, Tensor<double>({3}, {0.0, 0.0, 0.0}), partial)).at(p2);
  CHECK(g[1] == 0.0);
  CHECK(g[0] != 0.0);
}

TEST_CASE("backward accumulation and errors") {
  Tape<double> tape;
  auto x = tape.leaf(Tensor<double>({3}, {1.0, 2.0, 3.0}));
  const auto gx = tape.backward(sum(x)).at(x);
  for (double v : gx.data()) CHECK(v == 1.0);

  Tape<double> t2;
  auto y = t2.leaf(Tensor<double>({2}, {1.0, 2.0}));
  const auto g2 = t2.backward(sum(add(y, y))).at(y);
  for (double v : g2.data()) CHECK(v == 2.0);

  Tape<double> t3;
  auto z = t3.leaf(Tensor<double>({2}, {1.0, 2.0}));
  CHECK_THROWS_AS(t3.backward(z), Error);
  auto s = sum(z);
  t3.backward(s);
  try {
    t3.backward(s);
    FAIL("second backward accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DetachedLoss);
  }
  Tape<double> fresh;
  Tape<double> other;
  auto w = other.leaf(Tensor<double>({1}, 1.0));
  try {
    fresh.backward(sum(w));
    FAIL("foreign loss accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DetachedLoss);
  }
}

TEST_CASE("grad_check is exact on a quadratic") {
  std::mt19937_64 rng(8);
  ScalarFunction<double> f = [](Tape<double>&, const std::vector<Var<double>>& in) { return sum(mul(in[0], in[0])); };
  const auto r = grad_check<double>(f, {random_tensor({4, 3}, rng)}, 1e-5);
  CHECK(r.max_rel_error < 1e-9);
}

TEST_CASE("broken backward rule is detected") {
  std::mt19937_64 rng(10);
  ScalarFunction<double> f = [](Tape<double>&, const std::vector<Var<double>>& in) {
    return sum(mul(matmul(in[0], in[1]), matmul(in[0], in[1])));
  };
  const std::vector<Tensor<double>> inputs{random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)};
  debug::break_backward("matmul");
  const auto broken = grad_check<double>(f, inputs, 1e-5);
  debug::clear_broken_backward();
  const auto clean = grad_check<double>(f, inputs, 1e-5);
  CHECK(broken.max_rel_error > 1e-2);
  CHECK(clean.max_rel_error < 1e-6);
}

TEST_CASE("float and double agree on a small graph") {
  std::mt19937_64 rng(12);
  const auto a = random_tensor({3, 4}, rng);
  const auto b = random_tensor({4, 2}, rng);
  Tape<double> td;
  Tape<float> tf;
  const double d = sum(relu(matmul(td.constant(a), td.constant(b)))).value().item();
  const float f = sum(relu(matmul(tf.constant(a.cast<float>()), tf.constant(b.cast<float>())))).value().item();
  CHECK(f == doctest::Approx(d).epsilon(1e-5));
}
