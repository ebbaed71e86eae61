#pragma once

#include "selfattn/graph.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace selfattn {

/// Builds a scalar loss from leaves bound to the checked inputs.
using ScalarFn = std::function<Var<double>(Graph<double>&, std::span<const Var<double>>)>;

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t coordinates = 0;
  std::size_t worst_input = 0;
  Index worst_coordinate = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
};

/**
 * Compares reverse-mode gradients against central differences.
 *
 * The relative error of one coordinate is
 * |analytic - numeric| / max(|analytic|, |numeric|, floor).
 */
GradCheckResult grad_check(const ScalarFn& fn, std::vector<Tensor<double>> inputs, double eps = 1e-5,
                           double floor = 1e-8);

}  // namespace selfattn
