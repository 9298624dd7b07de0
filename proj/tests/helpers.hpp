// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "oracles.hpp"
#include "trimlp/tensor.hpp"

namespace testing {

inline trimlp::Tensor<double> random_tensor(trimlp::Shape shape, std::mt19937_64& rng,
                                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  trimlp::Tensor<double> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

inline oracle::Mat to_mat(const trimlp::Tensor<double>& t) {
  oracle::Mat m = oracle::zeros(t.dim(0), t.dim(1));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m[i][j] = t(i, j);
  return m;
}

inline double max_abs_diff(const trimlp::Tensor<double>& t, const oracle::Mat& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j)
      worst = std::max(worst, std::abs(t(i, j) - m[i][j]));
  return worst;
}

template <typename T>
bool bitwise_rows_equal(const trimlp::Tensor<T>& a, const trimlp::Tensor<T>& b,
                        std::size_t row_begin, std::size_t row_end) {
  for (std::size_t r = row_begin; r < row_end; ++r) {
    auto ra = a.row(r);
    auto rb = b.row(r);
    if (!std::equal(ra.begin(), ra.end(), rb.begin())) return false;
  }
  return true;
}

}  // namespace testing
