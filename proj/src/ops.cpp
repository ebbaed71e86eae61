#include "selfattn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace selfattn {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Index element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

namespace {

template <typename Scalar>
void require_matrix(const Tensor<Scalar>& t, const char* op) {
  if (t.rank() > 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

template <typename Scalar>
Index last_real_check(const Mask& mask, Index n) {
  if (mask.empty()) return n;
  if (static_cast<Index>(mask.size()) != n) {
    throw DimensionError("mask of length " + std::to_string(mask.size()) + " does not cover " + std::to_string(n) +
                         " columns");
  }
  const auto real = std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
  if (real == 0) throw InvalidInputError("invalid mask: no real position");
  return static_cast<Index>(real);
}

}  // namespace

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_string(av.shape()) + " by " + shape_string(bv.shape()));
  }
  Tensor<Scalar> out(Shape{av.rows(), bv.cols()});
  detail::multiply_into<Scalar>(av.mat(), bv.mat(), out.mat());
  return a.graph->record("matmul", {a, b}, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto grad = g.upstream(self).mat();
    const auto lhs = g.input_value(self, 0).mat();
    const auto rhs = g.input_value(self, 1).mat();
    if (auto* ga = g.grad_buffer(g.input_id(self, 0))) ga->mat().noalias() += grad * rhs.transpose();
    if (auto* gb = g.grad_buffer(g.input_id(self, 1))) gb->mat().noalias() += lhs.transpose() * grad;
  });
}

template <typename Scalar>
Var<Scalar> batched_dot(Var<Scalar> m, Var<Scalar> w) {
  const auto& mv = m.value();
  const auto& wv = w.value();
  if (mv.rank() != 2 || wv.rank() != 3 || wv.dim(0) != mv.dim(0) || wv.dim(1) != mv.dim(1)) {
    throw DimensionError("batched_dot: cannot combine " + shape_string(mv.shape()) + " with " +
                         shape_string(wv.shape()));
  }
  const Index rows = mv.dim(0);
  const Index k = wv.dim(2);
  Tensor<Scalar> out(Shape{rows, k});
  for (Index i = 0; i < rows; ++i) {
    detail::multiply_into<Scalar>(mv.mat().row(i), wv.slice(i),
                                  typename Tensor<Scalar>::MatrixMap(out.data() + i * k, 1, k));
  }
  return m.graph->record("batched_dot", {m, w}, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto grad = g.upstream(self).mat();
    const auto& mv = g.input_value(self, 0);
    const auto& wv = g.input_value(self, 1);
    auto* gm = g.grad_buffer(g.input_id(self, 0));
    auto* gw = g.grad_buffer(g.input_id(self, 1));
    for (Index i = 0; i < mv.dim(0); ++i) {
      if (gm) gm->mat().row(i).noalias() += grad.row(i) * wv.slice(i).transpose();
      if (gw) gw->slice(i).noalias() += mv.mat().row(i).transpose() * grad.row(i);
    }
  });
}

template <typename Scalar>
Var<Scalar> softmax_rows(Var<Scalar> x, const Mask& mask) {
  const auto& xv = x.value();
  require_matrix(xv, "softmax_rows");
  if (xv.cols() < 1) throw InvalidInputError("softmax_rows: needs at least one column");
  last_real_check<Scalar>(mask, xv.cols());
  auto real = [&mask](Index j) { return mask.empty() || mask[static_cast<std::size_t>(j)] != 0; };

  Tensor<Scalar> out(xv.shape());
  auto y = out.mat();
  const auto in = xv.mat();
  for (Index i = 0; i < in.rows(); ++i) {
    Scalar peak = -std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < in.cols(); ++j) {
      if (real(j)) peak = std::max(peak, in(i, j));
    }
    Scalar total = 0;
    for (Index j = 0; j < in.cols(); ++j) {
      y(i, j) = real(j) ? std::exp(in(i, j) - peak) : Scalar(0);
      total += y(i, j);
    }
    y.row(i) /= total;
  }
  return x.graph->record("softmax_rows", {x}, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto grad = g.upstream(self).mat();
    const auto y = g.node(self).value.mat();
    auto* gx = g.grad_buffer(g.input_id(self, 0));
    for (Index i = 0; i < y.rows(); ++i) {
      const Scalar dot = grad.row(i).dot(y.row(i));
      gx->mat().row(i).array() += y.row(i).array() * (grad.row(i).array() - dot);
    }
  });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> x) {
  Tensor<Scalar> out(x.value().shape());
  out.flat() = x.value().flat().array().tanh();
  return x.graph->record("tanh", {x}, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto y = g.node(self).value.mat().array();
    g.accumulate(g.input_id(self, 0), (g.upstream(self).mat().array() * (Scalar(1) - y * y)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> x) {
  Tensor<Scalar> out(x.value().shape());
  const auto in = x.value().flat();
  for (Index i = 0; i < in.size(); ++i) {
    const Scalar v = in(i);
    if (v >= 0) {
      out[i] = Scalar(1) / (Scalar(1) + std::exp(-v));
    } else {
      const Scalar e = std::exp(v);
      out[i] = e / (Scalar(1) + e);
    }
  }
  return x.graph->record("sigmoid", {x}, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto y = g.node(self).value.mat().array();
    g.accumulate(g.input_id(self, 0), (g.upstream(self).mat().array() * y * (Scalar(1) - y)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  Tensor<Scalar> out(x.value().shape());
  out.flat() = x.value().flat().cwiseMax(Scalar(0));
  return x.graph->record("relu", {x}, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto in = g.input_value(self, 0).mat().array();
    g.accumulate(g.input_id(self, 0),
                 (g.upstream(self).mat().array() * (in > Scalar(0)).template cast<Scalar>()).matrix());
  });
}

template <typename Scalar>
Var<Scalar> elementwise(Var<Scalar> a, Var<Scalar> b, Elementwise kind) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.shape() != bv.shape()) {
    throw DimensionError("elementwise: shapes " + shape_string(av.shape()) + " and " + shape_string(bv.shape()) +
                         " differ");
  }
  Tensor<Scalar> out(av.shape());
  const char* name = "add";
  switch (kind) {
    case Elementwise::add: out.flat() = av.flat() + bv.flat(); break;
    case Elementwise::sub: out.flat() = av.flat() - bv.flat(); name = "sub"; break;
    case Elementwise::mul: out.flat() = av.flat().cwiseProduct(bv.flat()); name = "mul"; break;
  }
  return a.graph->record(name, {a, b}, std::move(out), [kind](Graph<Scalar>& g, int self) {
    const auto grad = g.upstream(self).mat();
    switch (kind) {
      case Elementwise::add:
        g.accumulate(g.input_id(self, 0), grad);
        g.accumulate(g.input_id(self, 1), grad);
        break;
      case Elementwise::sub:
        g.accumulate(g.input_id(self, 0), grad);
        g.accumulate(g.input_id(self, 1), -grad);
        break;
      case Elementwise::mul:
        g.accumulate(g.input_id(self, 0), grad.cwiseProduct(g.input_value(self, 1).mat()));
        g.accumulate(g.input_id(self, 1), grad.cwiseProduct(g.input_value(self, 0).mat()));
        break;
    }
  });
}

template <typename Scalar>
Var<Scalar> add_bias(Var<Scalar> x, Var<Scalar> bias) {
  const auto& xv = x.value();
  const auto& bv = bias.value();
  require_matrix(xv, "add_bias");
  if (bv.size() != xv.cols() || bv.rank() > 2 || bv.rows() != 1) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) + " does not match " +
                         shape_string(xv.shape()));
  }
  Tensor<Scalar> out(xv.shape());
  out.mat() = xv.mat().rowwise() + bv.mat().row(0);
  return x.graph->record("add_bias", {x, bias}, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto grad = g.upstream(self).mat();
    g.accumulate(g.input_id(self, 0), grad);
    g.accumulate(g.input_id(self, 1), grad.colwise().sum());
  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> x, Scalar factor) {
  Tensor<Scalar> out(x.value().shape());
  out.flat() = x.value().flat() * factor;
  return x.graph->record("scale", {x}, std::move(out), [factor](Graph<Scalar>& g, int self) {
    g.accumulate(g.input_id(self, 0), g.upstream(self).mat() * factor);
  });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  auto out = Tensor<Scalar>::scalar(x.value().flat().sum());
  return x.graph->record("sum", {x}, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto& in = g.input_value(self, 0);
    g.accumulate(g.input_id(self, 0), RowMatrix<Scalar>::Constant(in.rows(), in.cols(), g.upstream(self).item()));
  });
}

template <typename Scalar>
Var<Scalar> frobenius_sq(Var<Scalar> x) {
  auto out = Tensor<Scalar>::scalar(x.value().flat().squaredNorm());
  return x.graph->record("frobenius_sq", {x}, std::move(out), [](Graph<Scalar>& g, int self) {
    g.accumulate(g.input_id(self, 0), g.input_value(self, 0).mat() * (Scalar(2) * g.upstream(self).item()));
  });
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> x) {
  const auto& xv = x.value();
  require_matrix(xv, "transpose");
  Tensor<Scalar> out(Shape{xv.cols(), xv.rows()});
  out.mat() = xv.mat().transpose();
  return x.graph->record("transpose", {x}, std::move(out), [](Graph<Scalar>& g, int self) {
    g.accumulate(g.input_id(self, 0), g.upstream(self).mat().transpose());
  });
}

template <typename Scalar>
Var<Scalar> concat_rows(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw InvalidInputError("concat_rows: nothing to concatenate");
  const Index cols = parts.front().value().cols();
  Index rows = 0;
  for (const auto& p : parts) {
    require_matrix(p.value(), "concat_rows");
    if (p.value().cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    rows += p.value().rows();
  }
  Tensor<Scalar> out(Shape{rows, cols});
  Index at = 0;
  for (const auto& p : parts) {
    out.mat().middleRows(at, p.value().rows()) = p.value().mat();
    at += p.value().rows();
  }
  return parts.front().graph->record("concat_rows", parts, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto grad = g.upstream(self).mat();
    Index at = 0;
    for (std::size_t k = 0; k < g.node(self).inputs.size(); ++k) {
      const Index rows = g.input_value(self, k).rows();
      g.accumulate(g.input_id(self, k), grad.middleRows(at, rows));
      at += rows;
    }
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw InvalidInputError("concat_cols: nothing to concatenate");
  const Index rows = parts.front().value().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    cols += p.value().cols();
  }
  Tensor<Scalar> out(Shape{rows, cols});
  Index at = 0;
  for (const auto& p : parts) {
    out.mat().middleCols(at, p.value().cols()) = p.value().mat();
    at += p.value().cols();
  }
  return parts.front().graph->record("concat_cols", parts, std::move(out), [](Graph<Scalar>& g, int self) {
    const auto grad = g.upstream(self).mat();
    Index at = 0;
    for (std::size_t k = 0; k < g.node(self).inputs.size(); ++k) {
      const Index cols = g.input_value(self, k).cols();
      g.accumulate(g.input_id(self, k), grad.middleCols(at, cols));
      at += cols;
    }
  });
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> x, Index begin, Index count) {
  const auto& xv = x.value();
  require_matrix(xv, "slice_cols");
  if (begin < 0 || count < 0 || begin + count > xv.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + shape_string(xv.shape()));
  }
  Tensor<Scalar> out(Shape{xv.rows(), count});
  out.mat() = xv.mat().middleCols(begin, count);
  return x.graph->record("slice_cols", {x}, std::move(out), [begin, count](Graph<Scalar>& g, int self) {
    g.grad_buffer(g.input_id(self, 0))->mat().middleCols(begin, count) += g.upstream(self).mat();
  });
}

template <typename Scalar>
Var<Scalar> select_row(Var<Scalar> x, Index row) {
  const auto& xv = x.value();
  require_matrix(xv, "select_row");
  if (row < 0 || row >= xv.rows()) {
    throw DimensionError("select_row: row " + std::to_string(row) + " outside " + shape_string(xv.shape()));
  }
  Tensor<Scalar> out(Shape{1, xv.cols()});
  out.mat() = xv.mat().row(row);
  return x.graph->record("select_row", {x}, std::move(out), [row](Graph<Scalar>& g, int self) {
    g.grad_buffer(g.input_id(self, 0))->mat().row(row) += g.upstream(self).mat().row(0);
  });
}

template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> x, Shape shape) {
  auto out = x.value().reshaped(std::move(shape));
  return x.graph->record("reshape", {x}, std::move(out), [](Graph<Scalar>& g, int self) {
    g.grad_buffer(g.input_id(self, 0))->flat() += g.upstream(self).flat();
  });
}

template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> table, const std::vector<TokenId>& ids) {
  const auto& tv = table.value();
  if (tv.rank() != 2) throw DimensionError("gather_rows: table must be a matrix, got " + shape_string(tv.shape()));
  for (const TokenId id : ids) {
    if (id < 0 || id >= tv.dim(0)) {
      throw InvalidInputError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                              std::to_string(tv.dim(0)));
    }
  }
  Tensor<Scalar> out(Shape{static_cast<Index>(ids.size()), tv.dim(1)});
  for (std::size_t i = 0; i < ids.size(); ++i) out.mat().row(static_cast<Index>(i)) = tv.mat().row(ids[i]);
  return table.graph->record("gather_rows", {table}, std::move(out), [ids](Graph<Scalar>& g, int self) {
    auto* gt = g.grad_buffer(g.input_id(self, 0));
    const auto grad = g.upstream(self).mat();
    for (std::size_t i = 0; i < ids.size(); ++i) gt->mat().row(ids[i]) += grad.row(static_cast<Index>(i));
  });
}

template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> x, Scalar rate, std::mt19937_64* rng) {
  if (!(rate >= 0 && rate < 1)) throw InvalidInputError("dropout rate must lie in [0, 1)");
  if (rng == nullptr || rate == 0) return x;
  std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
  Tensor<Scalar> factors(x.value().shape());
  const Scalar survivor = Scalar(1) / (Scalar(1) - rate);
  for (Index i = 0; i < factors.size(); ++i) factors[i] = keep(*rng) ? survivor : Scalar(0);
  Tensor<Scalar> out(x.value().shape());
  out.flat() = x.value().flat().cwiseProduct(factors.flat());
  return x.graph->record("dropout", {x}, std::move(out), [factors](Graph<Scalar>& g, int self) {
    g.accumulate(g.input_id(self, 0), g.upstream(self).mat().cwiseProduct(factors.mat()));
  });
}

template <typename Scalar>
Var<Scalar> cross_entropy(Var<Scalar> logits, Index label) {
  const auto& lv = logits.value();
  if (lv.rows() != 1 || lv.rank() > 2) {
    throw DimensionError("cross_entropy: logits must be a single row, got " + shape_string(lv.shape()));
  }
  const Index classes = lv.cols();
  if (label < 0 || label >= classes) {
    throw InvalidInputError("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                            " classes");
  }
  const auto row = lv.flat();
  const Scalar peak = row.maxCoeff();
  const Scalar log_total = peak + std::log((row.array() - peak).exp().sum());
  auto out = Tensor<Scalar>::scalar(log_total - row(label));
  return logits.graph->record("cross_entropy", {logits}, std::move(out), [label](Graph<Scalar>& g, int self) {
    const auto in = g.input_value(self, 0).flat();
    const Scalar peak = in.maxCoeff();
    Vector<Scalar> prob = (in.array() - peak).exp();
    prob /= prob.sum();
    prob(label) -= Scalar(1);
    g.grad_buffer(g.input_id(self, 0))->flat() += prob * g.upstream(self).item();
  });
}

#define SELFATTN_INSTANTIATE_OPS(S)                                                        \
  template Var<S> matmul(Var<S>, Var<S>);                                                  \
  template Var<S> batched_dot(Var<S>, Var<S>);                                             \
  template Var<S> softmax_rows(Var<S>, const Mask&);                                       \
  template Var<S> tanh(Var<S>);                                                            \
  template Var<S> sigmoid(Var<S>);                                                         \
  template Var<S> relu(Var<S>);                                                            \
  template Var<S> elementwise(Var<S>, Var<S>, Elementwise);                                \
  template Var<S> add_bias(Var<S>, Var<S>);                                                \
  template Var<S> scale(Var<S>, S);                                                        \
  template Var<S> sum(Var<S>);                                                             \
  template Var<S> frobenius_sq(Var<S>);                                                    \
  template Var<S> transpose(Var<S>);                                                       \
  template Var<S> concat_rows(const std::vector<Var<S>>&);                                 \
  template Var<S> concat_cols(const std::vector<Var<S>>&);                                 \
  template Var<S> slice_cols(Var<S>, Index, Index);                                        \
  template Var<S> select_row(Var<S>, Index);                                               \
  template Var<S> reshape(Var<S>, Shape);                                                  \
  template Var<S> gather_rows(Var<S>, const std::vector<TokenId>&);                        \
  template Var<S> dropout(Var<S>, S, std::mt19937_64*);                                    \
  template Var<S> cross_entropy(Var<S>, Index);

SELFATTN_INSTANTIATE_OPS(float)
SELFATTN_INSTANTIATE_OPS(double)

}  // namespace selfattn
