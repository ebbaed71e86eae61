#include "selfattn/encoder.hpp"

#include <cmath>

namespace selfattn {

namespace {

// Preactivations [1 x 4u] -> new (h, c).
template <typename Scalar>
CellState<Scalar> lstm_cell(Var<Scalar> gates, Var<Scalar> c_prev, Index units) {
  const auto input_gate = sigmoid(slice_cols(gates, 0, units));
  const auto forget_gate = sigmoid(slice_cols(gates, units, units));
  const auto candidate = tanh(slice_cols(gates, 2 * units, units));
  const auto output_gate = sigmoid(slice_cols(gates, 3 * units, units));
  const auto c = add(mul(forget_gate, c_prev), mul(input_gate, candidate));
  const auto h = mul(output_gate, tanh(c));
  return {h, c};
}

template <typename Scalar>
void check_lstm_shapes(const LstmWeights<Scalar>& p, Index input_dim) {
  const Index u = p.recurrent.value().cols();
  const auto& w = p.input.value();
  const auto& r = p.recurrent.value();
  if (w.rank() != 2 || r.rank() != 2 || r.dim(0) != 4 * u || w.dim(0) != 4 * u || w.dim(1) != input_dim ||
      p.bias.value().size() != 4 * u) {
    throw DimensionError("lstm: inconsistent weights " + shape_string(w.shape()) + ", " +
                         shape_string(r.shape()) + ", " + shape_string(p.bias.value().shape()) +
                         " for input width " + std::to_string(input_dim));
  }
}

}  // namespace

template <typename Scalar>
Var<Scalar> embed(Var<Scalar> table, const std::vector<TokenId>& tokens) {
  return gather_rows(table, tokens);
}

template <typename Scalar>
CellState<Scalar> lstm_step(Var<Scalar> x, Var<Scalar> h_prev, Var<Scalar> c_prev, const LstmWeights<Scalar>& p) {
  check_lstm_shapes(p, x.value().cols());
  const Index u = p.units();
  if (h_prev.value().size() != u || c_prev.value().size() != u) {
    throw DimensionError("lstm_step: state shapes " + shape_string(h_prev.shape()) + ", " +
                         shape_string(c_prev.shape()) + " do not match " + std::to_string(u) + " units");
  }
  const auto gates =
      add_bias(add(matmul(x, transpose(p.input)), matmul(h_prev, transpose(p.recurrent))), p.bias);
  return lstm_cell(gates, c_prev, u);
}

template <typename Scalar>
HiddenStates<Scalar> bilstm(Var<Scalar> sequence, const Mask& mask, const LstmWeights<Scalar>& forward,
                            const LstmWeights<Scalar>& backward) {
  const auto& s = sequence.value();
  if (s.rank() != 2 || s.dim(0) < 1) throw InvalidInputError("bilstm: empty sequence");
  const Index n = s.dim(0);
  check_lstm_shapes(forward, s.dim(1));
  check_lstm_shapes(backward, s.dim(1));
  const Index u = forward.units();
  if (backward.units() != u) throw DimensionError("bilstm: directions disagree on unit count");

  Mask real = mask.empty() ? Mask(static_cast<std::size_t>(n), 1) : mask;
  if (static_cast<Index>(real.size()) != n) {
    throw DimensionError("bilstm: mask length " + std::to_string(real.size()) + " vs sequence length " +
                         std::to_string(n));
  }
  std::vector<Index> positions;
  for (Index t = 0; t < n; ++t) {
    if (real[static_cast<std::size_t>(t)]) positions.push_back(t);
  }
  if (positions.empty()) throw InvalidInputError("bilstm: empty sequence (no real tokens)");

  Graph<Scalar>& g = *sequence.graph;
  const auto zero_state = Tensor<Scalar>(Shape{1, u});

  auto scan = [&](const LstmWeights<Scalar>& p, auto first, auto last) {
    std::vector<Var<Scalar>> out(static_cast<std::size_t>(n));
    const auto projected = matmul(sequence, transpose(p.input));
    const auto recurrent_t = transpose(p.recurrent);
    CellState<Scalar> state{g.constant(zero_state), g.constant(zero_state)};
    for (auto it = first; it != last; ++it) {
      const auto gates = add_bias(add(select_row(projected, *it), matmul(state.h, recurrent_t)), p.bias);
      state = lstm_cell(gates, state.c, u);
      out[static_cast<std::size_t>(*it)] = state.h;
    }
    return out;
  };
  const auto fwd = scan(forward, positions.begin(), positions.end());
  const auto bwd = scan(backward, positions.rbegin(), positions.rend());

  std::vector<Var<Scalar>> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) {
    const auto k = static_cast<std::size_t>(t);
    rows.push_back(real[k] ? concat_cols(std::vector<Var<Scalar>>{fwd[k], bwd[k]})
                           : g.constant(Tensor<Scalar>(Shape{1, 2 * u})));
  }
  return {concat_rows(rows), std::move(real)};
}

template <typename Scalar>
Tensor<Scalar> glorot_uniform(Shape shape, Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<Scalar> t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(dist(rng));
  return t;
}

#define SELFATTN_INSTANTIATE_ENCODER(S)                                                                   \
  template Var<S> embed(Var<S>, const std::vector<TokenId>&);                                             \
  template CellState<S> lstm_step(Var<S>, Var<S>, Var<S>, const LstmWeights<S>&);                         \
  template HiddenStates<S> bilstm(Var<S>, const Mask&, const LstmWeights<S>&, const LstmWeights<S>&);     \
  template Tensor<S> glorot_uniform(Shape, Index, Index, std::mt19937_64&);

SELFATTN_INSTANTIATE_ENCODER(float)
SELFATTN_INSTANTIATE_ENCODER(double)

}  // namespace selfattn
