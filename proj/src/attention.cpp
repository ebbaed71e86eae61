#include "selfattn/attention.hpp"

namespace selfattn {

template <typename Scalar>
Var<Scalar> attend(const HiddenStates<Scalar>& hidden, const AttentionWeights<Scalar>& weights) {
  const auto scores = tanh(matmul(weights.first, transpose(hidden.states)));
  return softmax_rows(matmul(weights.second, scores), hidden.mask);
}

template <typename Scalar>
Var<Scalar> attend_vector(const HiddenStates<Scalar>& hidden, Var<Scalar> first, Var<Scalar> second) {
  const Index da = second.value().size();
  const auto row = reshape(second, Shape{1, da});
  const auto weights = attend(hidden, AttentionWeights<Scalar>{first, row});
  return reshape(weights, Shape{hidden.length()});
}

template <typename Scalar>
Var<Scalar> pool(Var<Scalar> annotation, const HiddenStates<Scalar>& hidden) {
  if (annotation.value().cols() != hidden.length()) {
    throw DimensionError("pool: annotation " + shape_string(annotation.shape()) + " does not cover hidden states " +
                         shape_string(hidden.states.shape()));
  }
  return matmul(annotation, hidden.states);
}

template <typename Scalar>
Var<Scalar> penalty(Var<Scalar> annotation) {
  Graph<Scalar>& g = *annotation.graph;
  const Index hops = annotation.value().rows();
  const auto gram = matmul(annotation, transpose(annotation));
  return frobenius_sq(sub(gram, g.constant(Tensor<Scalar>::identity(hops))));
}

template <typename Scalar>
Scalar overlap(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("overlap: distributions " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  return a.flat().dot(b.flat());
}

template <typename Scalar>
Scalar mean_pairwise_overlap(const Tensor<Scalar>& annotation) {
  const auto a = annotation.mat();
  const Index hops = a.rows();
  if (hops < 2) return Scalar(0);
  Scalar total = 0;
  for (Index i = 0; i < hops; ++i) {
    for (Index j = i + 1; j < hops; ++j) total += a.row(i).dot(a.row(j));
  }
  return total / static_cast<Scalar>(hops * (hops - 1) / 2);
}

template <typename Scalar>
Tensor<Scalar> overall_attention(const Tensor<Scalar>& annotation) {
  const auto a = annotation.mat();
  if (a.rows() < 1) throw InvalidInputError("overall_attention: no hops");
  Tensor<Scalar> out(Shape{a.cols()});
  out.mat() = a.colwise().sum() / static_cast<Scalar>(a.rows());
  return out;
}

#define SELFATTN_INSTANTIATE_ATTENTION(S)                                                  \
  template Var<S> attend(const HiddenStates<S>&, const AttentionWeights<S>&);              \
  template Var<S> attend_vector(const HiddenStates<S>&, Var<S>, Var<S>);                   \
  template Var<S> pool(Var<S>, const HiddenStates<S>&);                                    \
  template Var<S> penalty(Var<S>);                                                         \
  template S overlap(const Tensor<S>&, const Tensor<S>&);                                  \
  template S mean_pairwise_overlap(const Tensor<S>&);                                      \
  template Tensor<S> overall_attention(const Tensor<S>&);

SELFATTN_INSTANTIATE_ATTENTION(float)
SELFATTN_INSTANTIATE_ATTENTION(double)

}  // namespace selfattn
