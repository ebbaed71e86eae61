#include "selfattn/heads.hpp"

namespace selfattn {

namespace {

template <typename Scalar>
Var<Scalar> flatten(Var<Scalar> x) {
  return reshape(x, Shape{1, x.value().size()});
}

// x [1 x n] times W^T for W [out x n], plus bias.
template <typename Scalar>
Var<Scalar> affine(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias) {
  return add_bias(matmul(x, transpose(weight)), bias);
}

}  // namespace

template <typename Scalar>
Var<Scalar> mlp_forward(Var<Scalar> embedding, const MlpWeights<Scalar>& head, DropoutSpec<Scalar> dropout) {
  const auto input = flatten(embedding);
  if (head.hidden.value().cols() != input.value().cols()) {
    throw DimensionError("mlp_forward: hidden weights " + shape_string(head.hidden.shape()) + " cannot read " +
                         shape_string(embedding.shape()));
  }
  auto hidden = relu(affine(input, head.hidden, head.hidden_bias));
  hidden = selfattn::dropout(hidden, dropout.rate, dropout.rng);
  return affine(hidden, head.output, head.output_bias);
}

template <typename Scalar>
Var<Scalar> pruned_hidden(Var<Scalar> embedding, const PrunedWeights<Scalar>& head) {
  const auto by_row = relu(batched_dot(embedding, head.row_groups));
  const auto by_column = relu(batched_dot(transpose(embedding), head.column_groups));
  return concat_cols(std::vector<Var<Scalar>>{flatten(by_row), flatten(by_column)});
}

template <typename Scalar>
Var<Scalar> pruned_forward(Var<Scalar> embedding, const PrunedWeights<Scalar>& head, DropoutSpec<Scalar> dropout) {
  auto hidden = pruned_hidden(embedding, head);
  hidden = selfattn::dropout(hidden, dropout.rate, dropout.rng);
  return affine(hidden, head.output, head.output_bias);
}

template <typename Scalar>
Var<Scalar> gated_encode(Var<Scalar> hypothesis, Var<Scalar> premise, const GatedWeights<Scalar>& weights) {
  if (hypothesis.shape() != premise.shape()) {
    throw DimensionError("gated_encode: embeddings " + shape_string(hypothesis.shape()) + " and " +
                         shape_string(premise.shape()) + " differ");
  }
  return mul(batched_dot(hypothesis, weights.hypothesis), batched_dot(premise, weights.premise));
}

#define SELFATTN_INSTANTIATE_HEADS(S)                                                      \
  template Var<S> mlp_forward(Var<S>, const MlpWeights<S>&, DropoutSpec<S>);               \
  template Var<S> pruned_hidden(Var<S>, const PrunedWeights<S>&);                          \
  template Var<S> pruned_forward(Var<S>, const PrunedWeights<S>&, DropoutSpec<S>);         \
  template Var<S> gated_encode(Var<S>, Var<S>, const GatedWeights<S>&);

SELFATTN_INSTANTIATE_HEADS(float)
SELFATTN_INSTANTIATE_HEADS(double)

}  // namespace selfattn
