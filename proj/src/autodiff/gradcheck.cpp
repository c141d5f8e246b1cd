#include "windfc/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace windfc::ad {

namespace {

template <typename T>
double evaluate(const ScalarFunction<T>& f, const std::vector<Tensor<T>>& inputs) {
  Tape<T> tape;
  std::vector<Var<T>> vars;
  vars.reserve(inputs.size());
  for (const auto& x : inputs) vars.push_back(tape.constant(x));
  return static_cast<double>(f(tape, vars).value().item());
}

}  // namespace

template <typename T>
GradCheckResult grad_check(const ScalarFunction<T>& f, const std::vector<Tensor<T>>& inputs, T eps,
                           double abs_floor) {
  if (!(eps > T(0))) throw Error(ErrorCode::InvalidArgument, "grad_check eps must be positive");

  std::vector<Tensor<T>> analytic;
  {
    Tape<T> tape;
    std::vector<Var<T>> vars;
    for (const auto& x : inputs) vars.push_back(tape.leaf(x, true));
    Var<T> out = f(tape, vars);
    if (out.value().size() != 1) throw Error(ErrorCode::NotScalar, "grad_check needs a scalar function");
    auto grads = tape.backward(out);
    for (const auto& v : vars) analytic.push_back(grads.at(v));
  }

  GradCheckResult result;
  std::vector<Tensor<T>> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t e = 0; e < inputs[i].size(); ++e) {
      const T original = probe[i][e];
      probe[i][e] = original + eps;
      const double plus = evaluate(f, probe);
      probe[i][e] = original - eps;
      const double minus = evaluate(f, probe);
      probe[i][e] = original;

      const double numeric = (plus - minus) / (2.0 * static_cast<double>(eps));
      const double a = static_cast<double>(analytic[i][e]);
      const double denom = std::max({std::abs(a), std::abs(numeric), abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.elements_checked;
      if (rel > result.max_rel_error || std::isnan(rel)) {
        result.max_rel_error = std::isnan(rel) ? INFINITY : rel;
        result.worst_input = i;
        result.worst_element = e;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

template GradCheckResult grad_check(const ScalarFunction<float>&, const std::vector<Tensor<float>>&, float, double);
template GradCheckResult grad_check(const ScalarFunction<double>&, const std::vector<Tensor<double>>&, double,
                                    double);

}  // namespace windfc::ad
