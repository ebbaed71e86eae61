#pragma once

#include "selfattn/encoder.hpp"

namespace selfattn {

/// Bias-free two-layer scoring MLP.
template <typename Scalar>
struct AttentionWeights {
  Var<Scalar> first;   // W_s1 [d_a x 2u]
  Var<Scalar> second;  // W_s2 [r x d_a]
};

/// A = softmax_rows(W_s2 tanh(W_s1 H^T)) with masked columns forced to zero. Result is r x n.
template <typename Scalar>
Var<Scalar> attend(const HiddenStates<Scalar>& hidden, const AttentionWeights<Scalar>& weights);

/// Single-hop weights [n] for a scoring vector `second` of length d_a.
template <typename Scalar>
Var<Scalar> attend_vector(const HiddenStates<Scalar>& hidden, Var<Scalar> first, Var<Scalar> second);

/// M = A H, one weighted sum of hidden states per hop.
template <typename Scalar>
Var<Scalar> pool(Var<Scalar> annotation, const HiddenStates<Scalar>& hidden);

/// ||A A^T - I||_F^2 with I of size r x r.
template <typename Scalar>
Var<Scalar> penalty(Var<Scalar> annotation);

/// Sum_k a_k b_k of two attention distributions.
template <typename Scalar>
Scalar overlap(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

/// Mean of overlap() over all unordered hop pairs; 0 when r = 1.
template <typename Scalar>
Scalar mean_pairwise_overlap(const Tensor<Scalar>& annotation);

/// Column sums of A divided by r.
template <typename Scalar>
Tensor<Scalar> overall_attention(const Tensor<Scalar>& annotation);

}  // namespace selfattn
