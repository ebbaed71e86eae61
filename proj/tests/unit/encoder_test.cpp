#include "selfattn/encoder.hpp"
#include "selfattn/gradcheck.hpp"
#include "selfattn/ops.hpp"
#include "test_support.hpp"

#include <cmath>

namespace selfattn {
namespace {

using testing::random_tensor;
using T = Tensor<double>;

struct LstmParams {
  T input, recurrent, bias;

  static LstmParams random(Index d, Index u, std::uint64_t seed) {
    return {random_tensor({4 * u, d}, seed), random_tensor({4 * u, u}, seed + 1), random_tensor({4 * u}, seed + 2)};
  }
  LstmWeights<double> bind(Graph<double>& g) const { return {g.leaf(input), g.leaf(recurrent), g.leaf(bias)}; }
};

TEST(Embed, RowsFollowTokenIds) {
  Graph<double> g;
  const auto table = random_tensor({5, 3}, 1);
  const auto out = embed(g.constant(table), {4, 0, 4}).value();
  ASSERT_EQ(out.shape(), (Shape{3, 3}));
  EXPECT_EQ(out.mat().row(0), table.mat().row(4));
  EXPECT_EQ(out.mat().row(1), table.mat().row(0));
  EXPECT_EQ(out.mat().row(2), table.mat().row(4));
}

TEST(Embed, UnknownIdIsRejected) {
  Graph<double> g;
  EXPECT_THROW(embed(g.constant(T(Shape{5, 3})), {1, 5}), InvalidInputError);
}

TEST(LstmStep, ZeroWeightsGiveHalfGatedZeroState) {
  Graph<double> g;
  const Index u = 3;
  const LstmWeights<double> p{g.constant(T(Shape{4 * u, 2})), g.constant(T(Shape{4 * u, u})),
                              g.constant(T(Shape{4 * u}))};
  const auto state = lstm_step(g.constant(random_tensor({1, 2}, 2)), g.constant(T(Shape{1, u})),
                               g.constant(T(Shape{1, u})), p);
  EXPECT_EQ(state.h.value(), T(Shape{1, u}));
  EXPECT_EQ(state.c.value(), T(Shape{1, u}));
}

TEST(LstmStep, MatchesHandWrittenCell) {
  const Index d = 2;
  const Index u = 3;
  const auto params = LstmParams::random(d, u, 3);
  const auto x = random_tensor({1, d}, 6);
  const auto h = random_tensor({1, u}, 7);
  const auto c = random_tensor({1, u}, 8);
  Graph<double> g;
  const auto out = lstm_step(g.constant(x), g.constant(h), g.constant(c), params.bind(g));

  const Eigen::VectorXd z = params.input.mat() * x.mat().transpose() + params.recurrent.mat() * h.mat().transpose() +
                            params.bias.mat().transpose();
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (Index j = 0; j < u; ++j) {
    const double in = sig(z(j));
    const double forget = sig(z(u + j));
    const double cell = std::tanh(z(2 * u + j));
    const double output = sig(z(3 * u + j));
    const double c_new = forget * c[j] + in * cell;
    EXPECT_NEAR(out.c.value()[j], c_new, 1e-12);
    EXPECT_NEAR(out.h.value()[j], output * std::tanh(c_new), 1e-12);
  }
}

TEST(LstmStep, SaturatedGatesCopyCandidate) {
  Graph<double> g;
  const Index u = 2;
  T bias(Shape{4 * u});
  bias.flat().segment(0, u).setConstant(60.0);       // input gate open
  bias.flat().segment(u, u).setConstant(-60.0);      // forget gate closed
  bias.flat().segment(2 * u, u).setConstant(0.5);    // candidate
  bias.flat().segment(3 * u, u).setConstant(60.0);   // output gate open
  const LstmWeights<double> p{g.constant(T(Shape{4 * u, 1})), g.constant(T(Shape{4 * u, u})), g.constant(bias)};
  const auto state = lstm_step(g.constant(T(Shape{1, 1})), g.constant(T(Shape{1, u})),
                               g.constant(T::constant({1, u}, 5.0)), p);
  for (Index j = 0; j < u; ++j) {
    EXPECT_NEAR(state.c.value()[j], std::tanh(0.5), 1e-12);
    EXPECT_NEAR(state.h.value()[j], std::tanh(std::tanh(0.5)), 1e-12);
  }
}

TEST(Bilstm, OutputShapeAndSingleToken) {
  Graph<double> g;
  const auto fwd = LstmParams::random(3, 4, 10);
  const auto bwd = LstmParams::random(3, 4, 20);
  const auto out = bilstm(g.constant(random_tensor({5, 3}, 30)), {}, fwd.bind(g), bwd.bind(g));
  EXPECT_EQ(out.states.shape(), (Shape{5, 8}));
  const auto one = bilstm(g.constant(random_tensor({1, 3}, 31)), {}, fwd.bind(g), bwd.bind(g));
  EXPECT_EQ(one.states.shape(), (Shape{1, 8}));
}

TEST(Bilstm, EmptyOrFullyMaskedInputIsRejected) {
  Graph<double> g;
  const auto p = LstmParams::random(3, 4, 10);
  EXPECT_THROW(bilstm(g.constant(T(Shape{0, 3})), {}, p.bind(g), p.bind(g)), InvalidInputError);
  EXPECT_THROW(bilstm(g.constant(T(Shape{2, 3})), Mask{0, 0}, p.bind(g), p.bind(g)), InvalidInputError);
}

TEST(Bilstm, ReversedInputWithSwappedDirectionsMirrorsOutput) {
  const Index n = 6;
  const Index u = 3;
  const auto fwd = LstmParams::random(4, u, 40);
  const auto bwd = LstmParams::random(4, u, 50);
  const auto x = random_tensor({n, 4}, 60);
  const T reversed = T::from_matrix(x.mat().colwise().reverse());

  Graph<double> g;
  const auto a = bilstm(g.constant(x), {}, fwd.bind(g), bwd.bind(g)).states.value();
  const auto b = bilstm(g.constant(reversed), {}, bwd.bind(g), fwd.bind(g)).states.value();
  for (Index t = 0; t < n; ++t) {
    const Index s = n - 1 - t;
    EXPECT_EQ(a.mat().row(t).head(u), b.mat().row(s).tail(u));
    EXPECT_EQ(a.mat().row(t).tail(u), b.mat().row(s).head(u));
  }
}

TEST(Bilstm, PaddingIsInert) {
  const auto fwd = LstmParams::random(3, 4, 70);
  const auto bwd = LstmParams::random(3, 4, 80);
  const auto real = random_tensor({4, 3}, 90);
  T padded(Shape{7, 3});
  padded.mat().topRows(4) = real.mat();
  padded.mat().bottomRows(3) = random_tensor({3, 3}, 91, 5.0).mat();

  Graph<double> g;
  const auto a = bilstm(g.constant(real), {}, fwd.bind(g), bwd.bind(g)).states.value();
  const auto b = bilstm(g.constant(padded), Mask{1, 1, 1, 1, 0, 0, 0}, fwd.bind(g), bwd.bind(g)).states.value();
  EXPECT_EQ(a.mat(), b.mat().topRows(4));
  EXPECT_TRUE((b.mat().bottomRows(3).array() == 0.0).all());
}

TEST(Bilstm, GradientsMatchFiniteDifferences) {
  const ScalarFn fn = [](Graph<double>&, std::span<const Var<double>> in) {
    const LstmWeights<double> fwd{in[1], in[2], in[3]};
    const LstmWeights<double> bwd{in[4], in[5], in[6]};
    return sum(tanh(bilstm(in[0], Mask{1, 1, 1, 0}, fwd, bwd).states));
  };
  const auto fwd = LstmParams::random(2, 2, 100);
  const auto bwd = LstmParams::random(2, 2, 110);
  const auto result = grad_check(
      fn, {random_tensor({4, 2}, 120), fwd.input, fwd.recurrent, fwd.bias, bwd.input, bwd.recurrent, bwd.bias});
  EXPECT_LT(result.max_relative_error, 1e-4);
}

TEST(Glorot, SamplesStayWithinBound) {
  std::mt19937_64 rng(5);
  const auto w = glorot_uniform<double>({50, 70}, 70, 50, rng);
  const double bound = std::sqrt(6.0 / 120.0);
  EXPECT_LE(w.flat().cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(w.flat().cwiseAbs().maxCoeff(), 0.9 * bound);
  EXPECT_NEAR(w.flat().mean(), 0.0, 0.02);
}

}  // namespace
}  // namespace selfattn
