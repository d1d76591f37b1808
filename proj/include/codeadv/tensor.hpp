// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace codeadv {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major tensor. The scalar type is the precision flag: float for
// training, double for tight gradient checks.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), values_(shape_size(shape_), T{0}) {}
  Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_size(shape_) != values_.size()) {
      throw ShapeError("tensor shape " + shape_string(shape_) + " does not match " +
                       std::to_string(values_.size()) + " values");
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor filled(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.values_.begin(), t.values_.end(), value);
    return t;
  }
  static Tensor scalar(T value) { return Tensor(Shape{1}, {value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // Matrix view: the last dimension is the column count, everything before
  // it is flattened into rows.
  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<T> row(std::size_t r) { return std::span<T>(values_).subspan(r * cols(), cols()); }
  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(values_).subspan(r * cols(), cols());
  }

  void fill(T value) { std::fill(values_.begin(), values_.end(), value); }

  template <class U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(values_.begin(), values_.end()));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  Shape shape_;
  std::vector<T> values_;
};

template <class T>
double frobenius_norm(const Tensor<T>& t) {
  double s = 0.0;
  for (T v : t.values()) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace codeadv
