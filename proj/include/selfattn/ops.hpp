#pragma once

#include "selfattn/graph.hpp"

#include <random>
#include <vector>

namespace selfattn {

using TokenId = std::int32_t;

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b);

/// Row i of the result is row i of `m` times slice i of the rank-3 `w`.
template <typename Scalar>
Var<Scalar> batched_dot(Var<Scalar> m, Var<Scalar> w);

/// Row-wise softmax. Columns with mask 0 get probability exactly 0; an empty
/// mask means every column is real.
template <typename Scalar>
Var<Scalar> softmax_rows(Var<Scalar> x, const Mask& mask = {});

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> x);
template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> x);
template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x);

enum class Elementwise { add, sub, mul };

template <typename Scalar>
Var<Scalar> elementwise(Var<Scalar> a, Var<Scalar> b, Elementwise kind);

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) { return elementwise(a, b, Elementwise::add); }
template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) { return elementwise(a, b, Elementwise::sub); }
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) { return elementwise(a, b, Elementwise::mul); }

/// x (m-by-n) plus a length-n bias broadcast over rows.
template <typename Scalar>
Var<Scalar> add_bias(Var<Scalar> x, Var<Scalar> bias);

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> x, Scalar factor);

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x);

/// Sum of squared entries.
template <typename Scalar>
Var<Scalar> frobenius_sq(Var<Scalar> x);

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> x);

/// Stacks matrices with equal column counts vertically.
template <typename Scalar>
Var<Scalar> concat_rows(const std::vector<Var<Scalar>>& parts);

/// Joins matrices with equal row counts side by side.
template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts);

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> x, Index begin, Index count);

/// Row `row` of a matrix as a 1-by-n matrix.
template <typename Scalar>
Var<Scalar> select_row(Var<Scalar> x, Index row);

template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> x, Shape shape);

/// Rows of `table` picked by `ids`; gradients scatter-add back into the table.
template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> table, const std::vector<TokenId>& ids);

/// Inverted dropout: survivors are scaled by 1/(1-rate). Identity when
/// `rng` is null or rate is 0.
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> x, Scalar rate, std::mt19937_64* rng);

/// Negative log-likelihood of `label` under softmax(logits), logits of shape [C] or [1, C].
template <typename Scalar>
Var<Scalar> cross_entropy(Var<Scalar> logits, Index label);

}  // namespace selfattn
