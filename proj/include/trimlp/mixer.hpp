// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Triangular Mixer: token mixing through n x n weight matrices whose dropped
// (masked) entries cut every connection from future tokens.
//
// For an input X [n x d] a branch computes
//
//   out = GELU(S^T . X),  S = masked_softmax(raw, mask)
//
// so output token i aggregates X_j over the sources j with mask(j, i) active.
// The global branch keeps j <= i. The local branch additionally splits the
// window into s sessions of length l = n / s and keeps only j in i's session.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "trimlp/layers.hpp"
#include "trimlp/tensor.hpp"

namespace trimlp {

enum class MixerVariant { kFull, kEye, kSquare, kGlobalOnly, kLocalOnly };
enum class Combine { kParallelAdd, kParallelConcat, kSerialGL, kSerialLG };

std::string_view to_string(MixerVariant v);
std::string_view to_string(Combine c);
std::string_view to_string(SoftmaxAxis a);
// Accepts the CLI spellings: eye, square, global, local, full.
std::optional<MixerVariant> parse_variant(std::string_view name);
// Accepts add, concat, serial-gl, serial-lg.
std::optional<Combine> parse_combine(std::string_view name);
std::optional<SoftmaxAxis> parse_axis(std::string_view name);

BinaryMask build_global_mask(std::size_t n);
BinaryMask build_local_mask(std::size_t n, std::size_t sessions);
BinaryMask build_identity_mask(std::size_t n);
BinaryMask build_full_mask(std::size_t n);

// Active raw value at initialization and the fill for dropped entries.
inline constexpr double kActiveInit = 1.0;
inline constexpr double kDroppedFill = -1e9;

// Structural (non-learnable) description of one mixer.
struct MixerLayout {
  std::size_t n = 0;
  std::size_t sessions = 1;
  MixerVariant variant = MixerVariant::kFull;
  Combine combine = Combine::kParallelAdd;
  SoftmaxAxis axis = SoftmaxAxis::kSource;
  // Mask used with raw_global. For kEye and kSquare this is the identity and
  // the all-active mask respectively.
  BinaryMask global_mask;
  BinaryMask local_mask;

  std::size_t session_length() const { return n / sessions; }
  bool uses_global() const;
  bool uses_local() const;
  bool uses_merge() const;
};

MixerLayout make_mixer_layout(std::size_t n, std::size_t sessions,
                              MixerVariant variant, Combine combine,
                              SoftmaxAxis axis);

template <typename T>
struct MixerWeights {
  Tensor<T> raw_global;  // [n x n]
  Tensor<T> raw_local;   // [n x n]
  Tensor<T> merge;       // [2d x d], only for Combine::kParallelConcat
};

// Active entries set to 1, dropped entries to -1e9. `merge` is left empty;
// the model initializes it with the other linear weights.
template <typename T>
MixerWeights<T> init_mixer_weights(const MixerLayout& layout);

template <typename T>
struct BranchCache {
  Tensor<T> input;
  Tensor<T> probs;  // masked softmax of the raw weights
  Tensor<T> pre;    // probs^T . input
};

template <typename T>
Tensor<T> mix_branch(const Tensor<T>& x, const Tensor<T>& raw,
                     const BinaryMask& mask, SoftmaxAxis axis,
                     BranchCache<T>* cache = nullptr);

// Returns dx; accumulates the raw-weight gradient into draw (zero at dropped
// entries).
template <typename T>
Tensor<T> mix_branch_backward(const Tensor<T>& dout, const BinaryMask& mask,
                              SoftmaxAxis axis, const BranchCache<T>& cache,
                              Tensor<T>& draw);

template <typename T>
struct MixCache {
  BranchCache<T> global;
  BranchCache<T> local;
  Tensor<T> concat;  // [n x 2d] for kParallelConcat
};

template <typename T>
Tensor<T> triangular_mix(const Tensor<T>& x, const MixerWeights<T>& w,
                         const MixerLayout& layout,
                         MixCache<T>* cache = nullptr);

template <typename T>
Tensor<T> triangular_mix_backward(const Tensor<T>& dout,
                                  const MixerWeights<T>& w,
                                  const MixerLayout& layout,
                                  const MixCache<T>& cache,
                                  MixerWeights<T>& grads);

}  // namespace trimlp
