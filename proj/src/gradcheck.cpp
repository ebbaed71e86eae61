#include "selfattn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace selfattn {

namespace {

double evaluate(const ScalarFn& fn, const std::vector<Tensor<double>>& inputs) {
  Graph<double> graph;
  std::vector<Var<double>> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(graph.constant(t));
  return fn(graph, leaves).value().item();
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& fn, std::vector<Tensor<double>> inputs, double eps, double floor) {
  Graph<double> graph;
  std::vector<Var<double>> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(graph.leaf(t));
  const Var<double> loss = fn(graph, leaves);
  graph.backward(loss);

  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor<double> analytic = graph.grad(leaves[k]);
    for (Index i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + eps;
      const double up = evaluate(fn, inputs);
      inputs[k][i] = saved - eps;
      const double down = evaluate(fn, inputs);
      inputs[k][i] = saved;

      const double numeric = (up - down) / (2 * eps);
      const double a = analytic[i];
      const double error = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.coordinates;
      if (error > result.max_relative_error || result.coordinates == 1) {
        result.max_relative_error = error;
        result.worst_input = k;
        result.worst_coordinate = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace selfattn
