// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "trimlp/tensor.hpp"

namespace trimlp {

using ItemId = std::int32_t;
inline constexpr ItemId kPadItem = 0;

using Rng = std::mt19937_64;

// Uniform [0, 1) double built from the top 53 bits, independent of the
// standard library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---- embedding ---------------------------------------------------------------

// Looks up rows of `table` [(|I|+1) x d]. Pad ids produce zero rows no matter
// what row 0 holds.
template <typename T>
Tensor<T> embed(std::span<const ItemId> ids, const Tensor<T>& table);

// Scatters `dout` rows into `dtable`, skipping pad positions.
template <typename T>
void embed_backward(std::span<const ItemId> ids, const Tensor<T>& dout,
                    Tensor<T>& dtable);

// ---- layer normalization -----------------------------------------------------

template <typename T>
struct LayerNormParams {
  Tensor<T> alpha;  // [d]
  Tensor<T> beta;   // [d]
};

template <typename T>
struct LayerNormCache {
  Tensor<T> normalized;  // (x - mean) / sqrt(var + eps), per row
  std::vector<T> inv_std;
};

// Normalizes each row of a rank-2 tensor over its last axis with the
// population variance.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const LayerNormParams<T>& p, T eps,
                     LayerNormCache<T>* cache = nullptr);

// Returns dx and accumulates into grads.alpha / grads.beta.
template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& dout, const LayerNormParams<T>& p,
                              const LayerNormCache<T>& cache,
                              LayerNormParams<T>& grads);

// ---- GELU ---------------------------------------------------------------------

// x * Phi(x) with the exact normal CDF.
template <typename T>
T gelu(T x);

// d/dx gelu = Phi(x) + x * phi(x).
template <typename T>
T gelu_grad(T x);

template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

// ---- dropout ------------------------------------------------------------------

// Inverted dropout. Writes the per-element scale (0 or 1/(1-rate)) into
// `scale` when training so the backward pass can replay it. In eval mode, or
// with rate 0, returns x unchanged and leaves `scale` empty.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng* rng,
                  std::vector<T>* scale = nullptr);

void validate_dropout_rate(double rate);

// ---- feed-forward -------------------------------------------------------------

template <typename T>
struct FfnParams {
  Tensor<T> w1;  // [d x 4d]
  Tensor<T> b1;  // [4d]
  Tensor<T> w2;  // [4d x d]
  Tensor<T> b2;  // [d]
};

template <typename T>
struct FfnCache {
  Tensor<T> input;
  Tensor<T> pre;     // input . w1 + b1
  Tensor<T> hidden;  // dropout(gelu(pre))
  std::vector<T> dropout_scale;
};

struct DropoutContext {
  double rate = 0.0;
  bool training = false;
  Rng* rng = nullptr;
};

// GELU(y . w1 + b1) . w2 + b2, applied row by row. Dropout sits after the GELU.
template <typename T>
Tensor<T> ffn(const Tensor<T>& y, const FfnParams<T>& p,
              const DropoutContext& drop = {}, FfnCache<T>* cache = nullptr);

template <typename T>
Tensor<T> ffn_backward(const Tensor<T>& dout, const FfnParams<T>& p,
                       const FfnCache<T>& cache, FfnParams<T>& grads);

// Adds bias [p] to every row of x [m x p].
template <typename T>
void add_row_bias(Tensor<T>& x, const Tensor<T>& bias);

// Accumulates column sums of dout into dbias.
template <typename T>
void add_column_sums(const Tensor<T>& dout, Tensor<T>& dbias);

}  // namespace trimlp
