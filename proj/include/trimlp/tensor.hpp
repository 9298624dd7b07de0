// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense row-major tensor plus the handful of kernels the model needs.
// Every differentiable kernel comes with an explicit backward; there is no
// autodiff graph. Training runs in float, gradient checking in double.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "trimlp/error.hpp"

namespace trimlp {

class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  std::size_t numel() const;
  std::string str() const;

  bool operator==(const Shape& other) const;

 private:
  std::array<std::size_t, 3> dims_{};
  std::size_t rank_ = 0;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.rank(); }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 access.
  T& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  // Rank-3 access.
  T& operator()(std::size_t b, std::size_t i, std::size_t j) {
    return data_[(b * shape_[1] + i) * shape_[2] + j];
  }
  const T& operator()(std::size_t b, std::size_t i, std::size_t j) const {
    return data_[(b * shape_[1] + i) * shape_[2] + j];
  }

  std::span<T> row(std::size_t i) {
    return {data_.data() + i * shape_[rank() - 1], shape_[rank() - 1]};
  }
  std::span<const T> row(std::size_t i) const {
    return {data_.data() + i * shape_[rank() - 1], shape_[rank() - 1]};
  }

  void fill(T value);
  bool all_finite() const;
  Tensor zeros_like() const { return Tensor(shape_); }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

// Dense n x n pattern of active (1) and dropped (0) weights. Entry (j, i) is
// the connection from source token j to target token i.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(std::size_t n, bool active = false);

  std::size_t n() const { return n_; }
  bool active(std::size_t source, std::size_t target) const {
    return bits_[source * n_ + target] != 0;
  }
  void set(std::size_t source, std::size_t target, bool on) {
    bits_[source * n_ + target] = on ? 1 : 0;
  }
  std::size_t active_count() const;
  std::span<const std::uint8_t> bits() const { return bits_; }

  bool operator==(const BinaryMask& other) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

// kSource normalizes over the source tokens feeding each target (column-wise);
// kTarget normalizes each source row over its targets.
enum class SoftmaxAxis { kSource, kTarget };

// out = a . b for rank-2 a [m x k] and b [k x p].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// Accumulates da += dout . b^T and db += a^T . dout. Either output may be null.
template <typename T>
void matmul_backward(const Tensor<T>& a, const Tensor<T>& b,
                     const Tensor<T>& dout, Tensor<T>* da, Tensor<T>* db);

// Swaps the last two axes of a rank-2 or rank-3 tensor.
template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& raw, const BinaryMask& mask,
                         SoftmaxAxis axis);

// Gradient with respect to the raw weights given the softmax output `probs`
// and upstream `dprobs`. Dropped entries always receive exactly zero.
template <typename T>
Tensor<T> masked_softmax_backward(const Tensor<T>& probs,
                                  const Tensor<T>& dprobs,
                                  const BinaryMask& mask, SoftmaxAxis axis);

struct GradCheckEntry {
  std::string name;
  Tensor<double>* value = nullptr;
  const Tensor<double>* analytic = nullptr;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_name;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Central-difference check of precomputed analytic gradients. `loss` must be a
// pure function of the tensors listed in `entries`. Relative error per entry is
// |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport gradient_check(const std::function<double()>& loss,
                               std::span<const GradCheckEntry> entries,
                               double step = 1e-5);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace trimlp
