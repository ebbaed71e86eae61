#include "selfattn/gradcheck.hpp"
#include "selfattn/ops.hpp"
#include "test_support.hpp"

namespace selfattn {
namespace {

using testing::random_tensor;
using T = Tensor<double>;

TEST(Backward, SumGivesOnes) {
  Graph<double> g;
  const auto x = g.leaf(random_tensor({2, 3}, 1));
  g.backward(sum(x));
  EXPECT_EQ(g.grad(x), T::constant({2, 3}, 1.0));
}

TEST(Backward, FrobeniusGivesTwiceInput) {
  Graph<double> g;
  const auto value = random_tensor({3, 2}, 2);
  const auto x = g.leaf(value);
  g.backward(frobenius_sq(x));
  for (Index i = 0; i < value.size(); ++i) EXPECT_DOUBLE_EQ(g.grad(x)[i], 2.0 * value[i]);
}

TEST(Backward, NonScalarLossIsRejected) {
  Graph<double> g;
  const auto x = g.leaf(random_tensor({2, 2}, 3));
  EXPECT_THROW(g.backward(tanh(x)), DimensionError);
}

TEST(Backward, ReusedNodeAccumulatesBothPaths) {
  Graph<double> g;
  const auto x = g.leaf(T::matrix(1, 2, {3, -1}));
  g.backward(sum(mul(x, x)));
  EXPECT_EQ(g.grad(x), T::matrix(1, 2, {6, -2}));
}

TEST(Backward, ConstantsReceiveNoGradient) {
  Graph<double> g;
  const auto w = g.leaf(random_tensor({2, 2}, 4));
  const auto c = g.constant(random_tensor({2, 2}, 5));
  g.backward(sum(matmul(w, c)));
  EXPECT_EQ(g.grad(c), T(Shape{2, 2}));
  EXPECT_FALSE(g.requires_grad(c.id));
}

TEST(Backward, MixingGraphsIsRejected) {
  Graph<double> a;
  Graph<double> b;
  EXPECT_THROW(add(a.leaf(T(Shape{1, 1})), b.leaf(T(Shape{1, 1}))), InvalidInputError);
}

TEST(GradCheck, LinearFunctionIsExactToRounding) {
  const auto w = random_tensor({1, 4}, 6);
  const ScalarFn fn = [&](Graph<double>& g, std::span<const Var<double>> in) {
    return sum(mul(in[0], g.constant(w)));
  };
  EXPECT_LT(grad_check(fn, {random_tensor({1, 4}, 7)}).max_relative_error, 1e-8);
}

TEST(GradCheck, TanhOfMatmulPasses) {
  const ScalarFn fn = [](Graph<double>&, std::span<const Var<double>> in) {
    return sum(tanh(matmul(in[0], in[1])));
  };
  const auto result = grad_check(fn, {random_tensor({3, 4}, 8), random_tensor({4, 2}, 9)});
  EXPECT_LT(result.max_relative_error, 1e-6);
  EXPECT_EQ(result.coordinates, 20u);
}

TEST(GradCheck, DetectsWrongBackwardRule) {
  const ScalarFn fn = [](Graph<double>& g, std::span<const Var<double>> in) {
    const auto x = in[0];
    auto doubled = x.value();
    doubled.flat() *= 2.0;
    // Forward computes 2x but the recorded rule passes the gradient through unscaled.
    const auto y = g.record("broken", {x}, doubled, [](Graph<double>& gr, int id) {
      gr.accumulate(gr.input_id(id, 0), gr.upstream(id).mat());
    });
    return sum(mul(y, y));
  };
  EXPECT_GT(grad_check(fn, {random_tensor({2, 2}, 10)}).max_relative_error, 0.1);
}

TEST(GradCheck, FloorBoundsRelativeErrorOfTinyGradients) {
  const ScalarFn fn = [](Graph<double>&, std::span<const Var<double>> in) { return scale(sum(in[0]), 1e-12); };
  EXPECT_LT(grad_check(fn, {random_tensor({2, 2}, 11)}).max_relative_error, 1e-4);
}

TEST(GradCheck, EveryDifferentiableOpPasses) {
  struct Case {
    const char* name;
    ScalarFn fn;
    std::vector<T> inputs;
  };
  const auto weights = random_tensor({3, 4}, 12);
  auto reduce = [weights](Var<double> v) {
    Graph<double>& g = *v.graph;
    auto w = weights;
    if (v.value().size() != w.size()) w = random_tensor(v.shape(), 13);
    return sum(mul(v, g.constant(w.reshaped(v.shape()))));
  };
  T away_from_zero = random_tensor({3, 4}, 14);
  for (Index i = 0; i < away_from_zero.size(); ++i) away_from_zero[i] += away_from_zero[i] < 0 ? -0.1 : 0.1;
  const std::vector<Case> cases{
      {"sigmoid", [&](Graph<double>&, auto in) { return reduce(sigmoid(in[0])); }, {random_tensor({3, 4}, 15)}},
      {"relu", [&](Graph<double>&, auto in) { return reduce(relu(in[0])); }, {away_from_zero}},
      {"softmax", [&](Graph<double>&, auto in) { return reduce(softmax_rows(in[0], Mask{1, 0, 1, 1})); },
       {random_tensor({3, 4}, 16)}},
      {"add_bias", [&](Graph<double>&, auto in) { return reduce(add_bias(in[0], in[1])); },
       {random_tensor({3, 4}, 17), random_tensor({4}, 18)}},
      {"transpose", [&](Graph<double>&, auto in) { return reduce(transpose(in[0])); }, {random_tensor({4, 3}, 19)}},
      {"slice_cols", [&](Graph<double>&, auto in) { return reduce(slice_cols(in[0], 1, 4)); },
       {random_tensor({3, 6}, 20)}},
      {"gather_rows", [&](Graph<double>&, auto in) { return reduce(gather_rows(in[0], {2, 0, 2})); },
       {random_tensor({4, 4}, 21)}},
      {"cross_entropy", [](Graph<double>&, auto in) { return cross_entropy(in[0], 2); }, {random_tensor({1, 4}, 22)}},
      {"batched_dot", [&](Graph<double>&, auto in) { return reduce(batched_dot(in[0], in[1])); },
       {random_tensor({3, 2}, 23), random_tensor({3, 2, 4}, 24)}},
  };
  for (const auto& c : cases) {
    EXPECT_LT(grad_check(c.fn, c.inputs).max_relative_error, 1e-4) << c.name;
  }
}

}  // namespace
}  // namespace selfattn
