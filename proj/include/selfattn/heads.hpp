#pragma once

#include "selfattn/ops.hpp"

#include <random>

namespace selfattn {

/// Dropout applies only when `rng` is set (training).
template <typename Scalar>
struct DropoutSpec {
  Scalar rate = 0;
  std::mt19937_64* rng = nullptr;
};

/// Two-layer ReLU classifier over the row-major flattening of its input.
template <typename Scalar>
struct MlpWeights {
  Var<Scalar> hidden;       // [b x inputs]
  Var<Scalar> hidden_bias;  // [b]
  Var<Scalar> output;       // [classes x b]
  Var<Scalar> output_bias;  // [classes]
};

/**
 * Structured hidden layer with pruned connections.
 *
 * Row group i (p units) sees only row i of M; column group j (q units) sees
 * only column j of M. The softmax layer reads flatten(M^v) followed by
 * flatten(M^h).
 */
template <typename Scalar>
struct PrunedWeights {
  Var<Scalar> row_groups;     // [r x 2u x p]
  Var<Scalar> column_groups;  // [2u x r x q]
  Var<Scalar> output;         // [classes x (r*p + 2u*q)]
  Var<Scalar> output_bias;    // [classes]
};

/// Factor weights of the gated encoder.
template <typename Scalar>
struct GatedWeights {
  Var<Scalar> hypothesis;  // [r x 2u x k]
  Var<Scalar> premise;     // [r x 2u x k]
};

/// logits [1 x classes] = W2 ReLU(W1 flatten(M) + b1) + b2, dropout on the hidden layer.
template <typename Scalar>
Var<Scalar> mlp_forward(Var<Scalar> embedding, const MlpWeights<Scalar>& head, DropoutSpec<Scalar> dropout = {});

/// [1 x (r*p + 2u*q)] concatenation of flatten(M^v) and flatten(M^h).
template <typename Scalar>
Var<Scalar> pruned_hidden(Var<Scalar> embedding, const PrunedWeights<Scalar>& head);

template <typename Scalar>
Var<Scalar> pruned_forward(Var<Scalar> embedding, const PrunedWeights<Scalar>& head,
                           DropoutSpec<Scalar> dropout = {});

/// F_r = batched_dot(M_h, W_fh) (*) batched_dot(M_p, W_fp), shape r x k.
template <typename Scalar>
Var<Scalar> gated_encode(Var<Scalar> hypothesis, Var<Scalar> premise, const GatedWeights<Scalar>& weights);

}  // namespace selfattn
