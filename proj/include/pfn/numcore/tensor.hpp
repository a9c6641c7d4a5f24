#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pfn/core/error.hpp"

namespace pfn {

using Index = Eigen::Index;

template <class Scalar>
using MatrixR = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Shape = std::vector<Index>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

/// Dense row-major tensor. Rank-0 is a scalar, rank-1 a row of `cols()` values;
/// higher ranks view as a matrix of (product of leading extents) x (last extent).
template <class Scalar>
class Tensor {
 public:
  using MatrixMap = Eigen::Map<MatrixR<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const MatrixR<Scalar>>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(VectorX<Scalar>::Zero(shape_size(shape_))) {}

  Tensor(Shape shape, VectorX<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require(shape_size(shape_) == data_.size(), ErrorKind::dimension,
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " + shape_str(shape_));
  }

  template <class Derived>
  static Tensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
    Tensor t({m.rows(), m.cols()});
    t.mat() = m;
    return t;
  }

  static Tensor scalar(Scalar v) {
    Tensor t(Shape{});
    t.data_[0] = v;
    return t;
  }

  static Tensor vector(std::initializer_list<Scalar> values) {
    Tensor t({static_cast<Index>(values.size())});
    Index i = 0;
    for (Scalar v : values) t.data_[i++] = v;
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_.size(); }
  Index cols() const { return shape_.empty() ? 1 : shape_.back(); }
  Index rows() const { return cols() == 0 ? 0 : size() / cols(); }

  VectorX<Scalar>& data() { return data_; }
  const VectorX<Scalar>& data() const { return data_; }

  MatrixMap mat() { return MatrixMap(data_.data(), rows(), cols()); }
  ConstMatrixMap mat() const { return ConstMatrixMap(data_.data(), rows(), cols()); }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }
  Scalar item() const {
    require(size() == 1, ErrorKind::contract, "item() on tensor of shape " + shape_str(shape_));
    return data_[0];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  template <class Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  bool all_finite() const { return data_.allFinite(); }

  void set_zero() { data_.setZero(); }

 private:
  Shape shape_{};
  VectorX<Scalar> data_{VectorX<Scalar>::Zero(1)};
};

/// Surfaces NaN/Inf as an error naming the producing site.
template <class Scalar>
void check_finite(const Tensor<Scalar>& t, const std::string& where) {
  if (!t.all_finite()) fail(ErrorKind::numeric, "non-finite values in " + where);
}

}  // namespace pfn
