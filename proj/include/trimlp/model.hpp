// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Embedding -> L pre-norm blocks -> linear classification head.
//
//   Y = X + Mix(LayerNorm(X))
//   Z = Y + FFN(LayerNorm(Y))
//   logits = Z . W + b
//
// The softmax over items is folded into the loss and skipped when ranking.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trimlp/layers.hpp"
#include "trimlp/mixer.hpp"
#include "trimlp/tensor.hpp"

namespace trimlp {

struct ModelConfig {
  std::size_t n = 64;         // window length
  std::size_t d = 128;        // embedding width
  std::size_t blocks = 2;     // L
  std::size_t sessions = 2;   // s, must divide n
  double dropout = 0.5;
  MixerVariant variant = MixerVariant::kFull;
  Combine combine = Combine::kParallelAdd;
  SoftmaxAxis axis = SoftmaxAxis::kSource;
  std::size_t vocab = 0;      // |I|, real items only
  double layer_norm_eps = 1e-5;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;
  MixerLayout mixer_layout() const;
};

// A fixed-length window of item ids. Pads (0) fill the head. When
// `reserved_tail` is set the final slot is a pad placeholder for the item
// being predicted, and ranking reads the row just before it.
struct TokenWindow {
  std::vector<ItemId> ids;
  std::size_t pad_len = 0;
  bool reserved_tail = false;

  // Head-pads `items` (oldest first) into a window of length n. With
  // reserved_tail the items fill positions up to n-1 and must number < n.
  static TokenWindow from_items(std::span<const ItemId> items, std::size_t n,
                                bool reserved_tail = false);

  std::size_t size() const { return ids.size(); }
  // Row whose logits score the next item.
  std::size_t query_row() const;
  // Throws VocabularyError / ConfigError on a malformed window.
  void validate(std::size_t n, std::size_t vocab) const;
};

template <typename T>
struct BlockParams {
  LayerNormParams<T> norm1;
  MixerWeights<T> mixer;
  LayerNormParams<T> norm2;
  FfnParams<T> ffn;
};

template <typename T>
struct ModelParams {
  Tensor<T> embedding;  // [(|I|+1) x d], row 0 is the pad
  std::vector<BlockParams<T>> blocks;
  Tensor<T> head_w;  // [d x |I|]
  Tensor<T> head_b;  // [|I|]

  // Visits every learnable tensor in a fixed order with a stable name.
  void for_each(const std::function<void(const std::string&, Tensor<T>&)>& fn);
  void for_each(
      const std::function<void(const std::string&, const Tensor<T>&)>& fn) const;

  ModelParams zeros_like() const;
  std::size_t census() const;
};

// Elementwise "pinned" flags for a named tensor: the pad embedding row and the
// dropped mixer entries. Empty when nothing in the tensor is pinned.
std::vector<std::uint8_t> pinned_entries(const ModelConfig& cfg,
                                         const MixerLayout& layout,
                                         const std::string& name,
                                         std::size_t size);

// Uniform +-sqrt(6 / (fan_in + fan_out)) for weight matrices, zero biases,
// unit LayerNorm scale, mixer raw weights per init_mixer_weights.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, Rng& rng);

template <typename T, typename U>
ModelParams<T> cast_params(const ModelParams<U>& src);

// Closed-form learnable count.
std::size_t param_count(const ModelConfig& cfg);

template <typename T>
struct BlockCache {
  LayerNormCache<T> norm1;
  MixCache<T> mix;
  LayerNormCache<T> norm2;
  FfnCache<T> ffn;
};

template <typename T>
struct ForwardCache {
  std::vector<ItemId> ids;
  std::vector<T> embed_dropout;
  std::vector<BlockCache<T>> blocks;
  Tensor<T> encoded;  // Z
};

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;  // dropout stream, required when training with dropout
};

// Runs embedding and all blocks. Returns Z [n x d].
template <typename T>
Tensor<T> encode(const ModelParams<T>& p, const ModelConfig& cfg,
                 const MixerLayout& layout, std::span<const ItemId> ids,
                 const ForwardOptions& opt = {},
                 ForwardCache<T>* cache = nullptr);

// Pre-softmax logits [n x |I|]; column c scores item c+1.
template <typename T>
Tensor<T> forward(const ModelParams<T>& p, const ModelConfig& cfg,
                  const MixerLayout& layout, std::span<const ItemId> ids,
                  const ForwardOptions& opt = {},
                  ForwardCache<T>* cache = nullptr);

// Backpropagates dlogits [n x |I|] through the cached forward pass,
// accumulating into grads.
template <typename T>
void backward(const ModelParams<T>& p, const ModelConfig& cfg,
              const MixerLayout& layout, const ForwardCache<T>& cache,
              const Tensor<T>& dlogits, ModelParams<T>& grads);

// Eval-mode logits of a single row, computed as Z[row] . W + b.
template <typename T>
std::vector<T> score_row(const ModelParams<T>& p, const ModelConfig& cfg,
                         const MixerLayout& layout, const TokenWindow& window,
                         std::size_t row);

// Top-K item ids by descending logit at window.query_row(); ties go to the
// smaller id.
std::vector<ItemId> predict_topk(const ModelParams<float>& p,
                                 const ModelConfig& cfg,
                                 const MixerLayout& layout,
                                 const TokenWindow& window, std::size_t k);

// Top-K over an explicit logits row (index c is item c+1).
std::vector<ItemId> topk_from_logits(std::span<const float> logits,
                                     std::size_t k);

}  // namespace trimlp
