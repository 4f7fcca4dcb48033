/*
 * Copyright 2026 The omniscale Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OMNISCALE_TENSOR_HPP
#define OMNISCALE_TENSOR_HPP

#include <functional>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "omniscale/errors.hpp"

namespace omniscale {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of rank 2 (rows, cols) or rank 3
/// (batch, channels, length). Storage is a flat Eigen array so whole-tensor
/// arithmetic goes through Eigen expressions.
template <typename Scalar>
class BasicTensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
    if (shape_.size() != 2 && shape_.size() != 3)
      throw InvalidArgument("tensor rank must be 2 or 3, got shape " + shape_string(shape_));
    for (Index d : shape_) {
      if (d < 0) throw InvalidArgument("negative tensor dimension");
    }
    data_ = Array::Zero(element_count(shape_));
  }

  BasicTensor(Shape shape, Array values) : BasicTensor(std::move(shape)) {
    if (values.size() != data_.size())
      throw InvalidArgument("value count does not match shape " + shape_string(shape_));
    data_ = std::move(values);
  }

  static BasicTensor zeros(Shape shape) { return BasicTensor(std::move(shape)); }

  static BasicTensor full(Shape shape, Scalar value) {
    BasicTensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  static BasicTensor from_values(Shape shape, std::initializer_list<Scalar> values) {
    BasicTensor t(std::move(shape));
    if (static_cast<Index>(values.size()) != t.size())
      throw InvalidArgument("value count does not match shape " + shape_string(t.shape_));
    std::copy(values.begin(), values.end(), t.data_.data());
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return data_.size(); }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator()(Index r, Index c) { return data_[r * shape_[1] + c]; }
  Scalar operator()(Index r, Index c) const { return data_[r * shape_[1] + c]; }
  Scalar& operator()(Index b, Index c, Index l) { return data_[(b * shape_[1] + c) * shape_[2] + l]; }
  Scalar operator()(Index b, Index c, Index l) const {
    return data_[(b * shape_[1] + c) * shape_[2] + l];
  }

  // Rank 2: the whole tensor. Rank 3: not available, use sample().
  MatrixMap matrix() { return MatrixMap(data(), shape_.at(0), shape_.at(1)); }
  ConstMatrixMap matrix() const { return ConstMatrixMap(data(), shape_.at(0), shape_.at(1)); }

  // (channels x length) view of batch item b of a rank-3 tensor.
  MatrixMap sample(Index b) {
    return MatrixMap(data() + b * shape_.at(1) * shape_.at(2), shape_[1], shape_[2]);
  }
  ConstMatrixMap sample(Index b) const {
    return ConstMatrixMap(data() + b * shape_.at(1) * shape_.at(2), shape_[1], shape_[2]);
  }

  bool same_shape(const BasicTensor& other) const { return shape_ == other.shape_; }

  static Index element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
  }

 private:
  Shape shape_;
  Array data_;
};

using Tensor = BasicTensor<double>;

}  // namespace omniscale

#endif  // OMNISCALE_TENSOR_HPP
