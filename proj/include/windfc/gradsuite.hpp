#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "windfc/model.hpp"

namespace windfc {

struct GradSuiteOptions {
  std::size_t trials = 100;  // random shapes per primitive
  std::uint64_t seed = 2022;
  double eps = 1e-5;
  double tolerance = 1e-6;
  double layer_norm_tolerance = 1e-5;
  double model_tolerance = 1e-4;
  /// Floor on the relative-error denominator. Central differences carry
  /// about 1e-11 of rounding noise, which swamps gradients near zero.
  double abs_floor = 1e-4;
  bool include_model = true;
};

struct PrimitiveCheck {
  std::string op;
  std::size_t trials = 0;
  std::size_t elements = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct GradSuiteReport {
  std::vector<PrimitiveCheck> checks;  // primitives, then "full_model" when included
  double seconds = 0.0;

  bool all_passed() const;
};

/// Primitive names understood by the suite and by ad::debug::break_backward.
std::vector<std::string> grad_suite_ops();

/// Configuration used for the whole-model check.
ForecasterConfig grad_check_model_config();

/// Finite-difference checks of every primitive in double precision, plus
/// one check over all parameters of a reduced forecaster.
GradSuiteReport run_grad_suite(const GradSuiteOptions& options = {});

}  // namespace windfc
