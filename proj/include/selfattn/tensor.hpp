#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfattn {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

/// Raised whenever operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for structurally invalid inputs (empty sequences, bad masks, bad labels).
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_string(const Shape& shape);
Index element_count(const Shape& shape);

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A validity mask over sequence positions: nonzero marks a real token.
using Mask = std::vector<std::uint8_t>;

/**
 * Dense row-major tensor of rank 0 to 3.
 *
 * Rank-0 tensors hold a single value. For matrix views a rank-1 tensor of
 * length n is a 1-by-n row and a rank-3 tensor [a, b, c] is viewed through
 * slice(i), each slice being a b-by-c matrix.
 */
template <typename Scalar>
class Tensor {
 public:
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), values_(Vector<Scalar>::Zero(element_count(shape_))) {}

  Tensor(Shape shape, std::vector<Scalar> values) : shape_(std::move(shape)) {
    if (static_cast<Index>(values.size()) != element_count(shape_)) {
      throw DimensionError("tensor of shape " + shape_string(shape_) + " cannot hold " +
                           std::to_string(values.size()) + " values");
    }
    values_ = Eigen::Map<const Vector<Scalar>>(values.data(), static_cast<Index>(values.size()));
  }

  static Tensor scalar(Scalar value) {
    Tensor t(Shape{});
    t.values_(0) = value;
    return t;
  }

  static Tensor from_matrix(const Eigen::Ref<const RowMatrix<Scalar>>& m) {
    Tensor t(Shape{m.rows(), m.cols()});
    t.mat() = m;
    return t;
  }

  static Tensor matrix(Index rows, Index cols, std::initializer_list<Scalar> values) {
    return Tensor(Shape{rows, cols}, std::vector<Scalar>(values));
  }

  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.values_.setConstant(value);
    return t;
  }

  static Tensor identity(Index n) {
    Tensor t(Shape{n, n});
    t.mat().setIdentity();
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return values_.size(); }
  bool empty() const { return values_.size() == 0 && shape_.empty(); }

  Scalar* data() { return values_.data(); }
  const Scalar* data() const { return values_.data(); }
  Vector<Scalar>& flat() { return values_; }
  const Vector<Scalar>& flat() const { return values_; }
  Scalar& operator[](Index i) { return values_(i); }
  Scalar operator[](Index i) const { return values_(i); }
  Scalar item() const {
    if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape_));
    return values_(0);
  }

  Index rows() const {
    switch (shape_.size()) {
      case 0:
      case 1: return 1;
      case 2: return shape_[0];
      default: return shape_[0] * shape_[1];
    }
  }
  Index cols() const {
    switch (shape_.size()) {
      case 0: return 1;
      case 1: return shape_[0];
      case 2: return shape_[1];
      default: return shape_[2];
    }
  }

  MatrixMap mat() { return MatrixMap(values_.data(), rows(), cols()); }
  ConstMatrixMap mat() const { return ConstMatrixMap(values_.data(), rows(), cols()); }

  MatrixMap slice(Index i) {
    require_rank3();
    return MatrixMap(values_.data() + i * shape_[1] * shape_[2], shape_[1], shape_[2]);
  }
  ConstMatrixMap slice(Index i) const {
    require_rank3();
    return ConstMatrixMap(values_.data() + i * shape_[1] * shape_[2], shape_[1], shape_[2]);
  }

  Tensor reshaped(Shape shape) const {
    if (element_count(shape) != size()) {
      throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.values_ = values_;
    return t;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> t(shape_);
    t.flat() = values_.template cast<Other>();
    return t;
  }

  bool all_finite() const { return values_.allFinite(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  void require_rank3() const {
    if (shape_.size() != 3) throw DimensionError("slice() needs a rank-3 tensor, got " + shape_string(shape_));
  }

  Shape shape_;
  Vector<Scalar> values_;
};

namespace detail {

/// out = a * b, accumulating each output entry over the inner index in
/// ascending order. The fixed order makes products reproducible bit for bit
/// regardless of the outer dimensions.
template <typename Scalar, typename A, typename B>
void multiply_into(const A& a, const B& b, Eigen::Map<RowMatrix<Scalar>> out) {
  out.setZero();
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index k = 0; k < a.cols(); ++k) {
      out.row(i) += a(i, k) * b.row(k);
    }
  }
}

}  // namespace detail

}  // namespace selfattn
