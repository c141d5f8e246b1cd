#pragma once

#include <functional>
#include <string>
#include <vector>

#include "windfc/autodiff/ops.hpp"

namespace windfc::ad {

/// Builds a scalar on `tape` from leaves bound to the given inputs.
template <typename T>
using ScalarFunction = std::function<Var<T>(Tape<T>& tape, const std::vector<Var<T>>& inputs)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_element = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t elements_checked = 0;
};

/// Compares tape gradients against central differences
/// (f(x + eps e) - f(x - eps e)) / (2 eps) for every element of every input.
/// Relative error is |a - n| / max(|a|, |n|, abs_floor).
template <typename T>
GradCheckResult grad_check(const ScalarFunction<T>& f, const std::vector<Tensor<T>>& inputs, T eps,
                           double abs_floor = 1e-8);

}  // namespace windfc::ad
