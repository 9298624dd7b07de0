// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace trimlp {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
ConstMatrixMap<T> as_matrix(const Tensor<T>& t) {
  return ConstMatrixMap<T>(t.data(), static_cast<Eigen::Index>(t.dim(0)),
                           static_cast<Eigen::Index>(t.dim(1)));
}

template <typename T>
MatrixMap<T> as_matrix(Tensor<T>& t) {
  return MatrixMap<T>(t.data(), static_cast<Eigen::Index>(t.dim(0)),
                      static_cast<Eigen::Index>(t.dim(1)));
}

void require_rank2(const Shape& s, const char* op) {
  if (s.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " +
                         s.str());
  }
}

void check_softmax_shapes(const Shape& raw, const BinaryMask& mask) {
  if (raw.rank() != 2 || raw[0] != raw[1] || raw[0] != mask.n()) {
    throw DimensionError("masked_softmax: raw weights " + raw.str() +
                         " do not match a mask of size " +
                         std::to_string(mask.n()));
  }
}

// The k-th entry of normalization slice `fixed`: column `fixed` for kSource,
// row `fixed` for kTarget. Returned as (source, target).
std::pair<std::size_t, std::size_t> slice_entry(SoftmaxAxis axis,
                                                std::size_t fixed,
                                                std::size_t k) {
  return axis == SoftmaxAxis::kSource ? std::pair{k, fixed}
                                      : std::pair{fixed, k};
}

}  // namespace

Shape::Shape(std::initializer_list<std::size_t> dims) {
  if (dims.size() < 1 || dims.size() > 3) {
    throw DimensionError("tensor rank must be 1..3, got " +
                         std::to_string(dims.size()));
  }
  for (std::size_t d : dims) {
    if (d == 0) throw DimensionError("tensor extents must be positive");
    dims_[rank_++] = d;
  }
}

std::size_t Shape::numel() const {
  if (rank_ == 0) return 0;
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < rank_; ++i) os << (i ? "x" : "") << dims_[i];
  os << "]";
  return os.str();
}

bool Shape::operator==(const Shape& other) const {
  if (rank_ != other.rank_) return false;
  for (std::size_t i = 0; i < rank_; ++i) {
    if (dims_[i] != other.dims_[i]) return false;
  }
  return true;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : shape_(shape), data_(shape.numel(), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.numel()) {
    throw DimensionError("tensor of shape " + shape_.str() + " needs " +
                         std::to_string(shape_.numel()) + " values, got " +
                         std::to_string(data_.size()));
  }
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](T v) { return std::isfinite(v); });
}

template class Tensor<float>;
template class Tensor<double>;

BinaryMask::BinaryMask(std::size_t n, bool active)
    : n_(n), bits_(n * n, active ? 1 : 0) {}

std::size_t BinaryMask::active_count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a.shape(), "matmul");
  require_rank2(b.shape(), "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions disagree for " +
                         a.shape().str() + " . " + b.shape().str());
  }
  Tensor<T> out(Shape{a.dim(0), b.dim(1)});
  as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
  return out;
}

template <typename T>
void matmul_backward(const Tensor<T>& a, const Tensor<T>& b,
                     const Tensor<T>& dout, Tensor<T>* da, Tensor<T>* db) {
  if (!(dout.shape() == Shape{a.dim(0), b.dim(1)})) {
    throw DimensionError("matmul_backward: upstream gradient " +
                         dout.shape().str() + " does not match " +
                         a.shape().str() + " . " + b.shape().str());
  }
  if (da != nullptr) {
    as_matrix(*da).noalias() += as_matrix(dout) * as_matrix(b).transpose();
  }
  if (db != nullptr) {
    as_matrix(*db).noalias() += as_matrix(a).transpose() * as_matrix(dout);
  }
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.rank() == 2) {
    Tensor<T> out(Shape{a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
      for (std::size_t j = 0; j < a.dim(1); ++j) out(j, i) = a(i, j);
    }
    return out;
  }
  if (a.rank() == 3) {
    Tensor<T> out(Shape{a.dim(0), a.dim(2), a.dim(1)});
    for (std::size_t b = 0; b < a.dim(0); ++b) {
      for (std::size_t i = 0; i < a.dim(1); ++i) {
        for (std::size_t j = 0; j < a.dim(2); ++j) out(b, j, i) = a(b, i, j);
      }
    }
    return out;
  }
  throw DimensionError("transpose: rank-1 tensor " + a.shape().str() +
                       " has no axes to swap");
}

template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& raw, const BinaryMask& mask,
                         SoftmaxAxis axis) {
  check_softmax_shapes(raw.shape(), mask);
  const std::size_t n = mask.n();
  Tensor<T> out(raw.shape());
  for (std::size_t fixed = 0; fixed < n; ++fixed) {
    T peak = -std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      auto [r, c] = slice_entry(axis, fixed, k);
      if (mask.active(r, c)) peak = std::max(peak, raw(r, c));
    }
    if (peak == -std::numeric_limits<T>::infinity()) {
      throw DegenerateMaskError(
          std::string("masked_softmax: ") +
          (axis == SoftmaxAxis::kSource ? "column " : "row ") +
          std::to_string(fixed) + " has no active entries");
    }
    T total = 0;
    for (std::size_t k = 0; k < n; ++k) {
      auto [r, c] = slice_entry(axis, fixed, k);
      if (mask.active(r, c)) {
        const T e = std::exp(raw(r, c) - peak);
        out(r, c) = e;
        total += e;
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      auto [r, c] = slice_entry(axis, fixed, k);
      if (mask.active(r, c)) out(r, c) /= total;
    }
  }
  return out;
}

template <typename T>
Tensor<T> masked_softmax_backward(const Tensor<T>& probs,
                                  const Tensor<T>& dprobs,
                                  const BinaryMask& mask, SoftmaxAxis axis) {
  check_softmax_shapes(probs.shape(), mask);
  if (!(dprobs.shape() == probs.shape())) {
    throw DimensionError("masked_softmax_backward: gradient " +
                         dprobs.shape().str() + " vs probabilities " +
                         probs.shape().str());
  }
  const std::size_t n = mask.n();
  Tensor<T> draw(probs.shape());
  for (std::size_t fixed = 0; fixed < n; ++fixed) {
    T dot = 0;
    for (std::size_t k = 0; k < n; ++k) {
      auto [r, c] = slice_entry(axis, fixed, k);
      if (mask.active(r, c)) dot += probs(r, c) * dprobs(r, c);
    }
    for (std::size_t k = 0; k < n; ++k) {
      auto [r, c] = slice_entry(axis, fixed, k);
      if (mask.active(r, c)) draw(r, c) = probs(r, c) * (dprobs(r, c) - dot);
    }
  }
  return draw;
}

GradCheckReport gradient_check(const std::function<double()>& loss,
                               std::span<const GradCheckEntry> entries,
                               double step) {
  const double base = loss();
  const double again = loss();
  if (base != again || !std::isfinite(base)) {
    throw DeterminismError(
        "gradient_check: loss closure is not deterministic (" +
        std::to_string(base) + " vs " + std::to_string(again) + ")");
  }
  GradCheckReport report;
  for (const GradCheckEntry& e : entries) {
    if (e.value == nullptr || e.analytic == nullptr ||
        !(e.value->shape() == e.analytic->shape())) {
      throw DimensionError("gradient_check: entry '" + e.name +
                           "' has missing or mismatched gradient");
    }
    for (std::size_t i = 0; i < e.value->size(); ++i) {
      double& w = (*e.value)[i];
      const double saved = w;
      w = saved + step;
      const double plus = loss();
      w = saved - step;
      const double minus = loss();
      w = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double analytic = (*e.analytic)[i];
      const double denom =
          std::max({1.0, std::abs(analytic), std::abs(numeric)});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (report.worst_name.empty() || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_name = e.name;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

#define TRIMLP_INSTANTIATE(T)                                                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);               \
  template void matmul_backward(const Tensor<T>&, const Tensor<T>&,            \
                                const Tensor<T>&, Tensor<T>*, Tensor<T>*);     \
  template Tensor<T> transpose(const Tensor<T>&);                              \
  template Tensor<T> masked_softmax(const Tensor<T>&, const BinaryMask&,       \
                                    SoftmaxAxis);                              \
  template Tensor<T> masked_softmax_backward(const Tensor<T>&,                 \
                                             const Tensor<T>&,                 \
                                             const BinaryMask&, SoftmaxAxis);

TRIMLP_INSTANTIATE(float)
TRIMLP_INSTANTIATE(double)

#undef TRIMLP_INSTANTIATE

}  // namespace trimlp
