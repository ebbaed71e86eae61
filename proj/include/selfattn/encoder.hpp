#pragma once

#include "selfattn/ops.hpp"

#include <random>
#include <vector>

namespace selfattn {

/// Token ids of one (possibly padded) sentence and its validity mask.
struct Sentence {
  std::vector<TokenId> tokens;
  Mask mask;

  static Sentence unpadded(std::vector<TokenId> tokens) {
    Mask mask(tokens.size(), 1);
    return {std::move(tokens), std::move(mask)};
  }
};

/// One direction of LSTM weights. Gate order along the 4u axis: input, forget, cell, output.
template <typename Scalar>
struct LstmWeights {
  Var<Scalar> input;      // [4u x d]
  Var<Scalar> recurrent;  // [4u x u]
  Var<Scalar> bias;       // [4u]

  Index units() const { return recurrent.value().dim(1); }
};

template <typename Scalar>
struct CellState {
  Var<Scalar> h;
  Var<Scalar> c;
};

/// n-by-2u concatenated forward/backward states; masked rows are zero.
template <typename Scalar>
struct HiddenStates {
  Var<Scalar> states;
  Mask mask;

  Index length() const { return states.value().rows(); }
};

/// Embedding lookup: row i is the table row of token i.
template <typename Scalar>
Var<Scalar> embed(Var<Scalar> table, const std::vector<TokenId>& tokens);

/// One recurrence of a standard LSTM cell on row vectors x [1 x d], h and c [1 x u].
template <typename Scalar>
CellState<Scalar> lstm_step(Var<Scalar> x, Var<Scalar> h_prev, Var<Scalar> c_prev, const LstmWeights<Scalar>& p);

/**
 * Bidirectional LSTM over the real positions of `sequence` (n x d).
 *
 * The forward scan visits real positions left to right, the backward scan
 * right to left starting at the last real token, so padding never reaches
 * an unmasked row. An empty mask marks every position real.
 */
template <typename Scalar>
HiddenStates<Scalar> bilstm(Var<Scalar> sequence, const Mask& mask, const LstmWeights<Scalar>& forward,
                            const LstmWeights<Scalar>& backward);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
Tensor<Scalar> glorot_uniform(Shape shape, Index fan_in, Index fan_out, std::mt19937_64& rng);

}  // namespace selfattn
