// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trimlp/data.hpp"
#include "trimlp/evaluation.hpp"
#include "trimlp/model.hpp"

namespace trimlp {

struct TrainConfig {
  double lr = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch = 64;
  std::size_t patience = 10;
  std::size_t max_epochs = 500;
  std::uint64_t seed = 42;
  std::string eval_metric = "HR@10";
  std::size_t eval_threads = 1;

  void validate() const;
};

// ---- loss ---------------------------------------------------------------------

struct LossResult {
  double loss = 0.0;
  std::size_t counted = 0;  // positions with a real target
};

// Summed cross-entropy of log_softmax(logits[i])[t_i] over positions whose
// target is not kIgnoreTarget. Writes (softmax - onehot) * grad_scale into
// dlogits at counted rows and zero elsewhere.
template <typename T>
LossResult cross_entropy(const Tensor<T>& logits,
                         std::span<const std::int32_t> targets,
                         Tensor<T>* dlogits = nullptr, T grad_scale = T(1));

// ---- optimizer ----------------------------------------------------------------

template <typename T>
struct AdamState {
  ModelParams<T> m;
  ModelParams<T> v;
  std::int64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(const ModelParams<T>& params);

// Per-tensor pinned flags in ModelParams::for_each order.
using PinnedMasks = std::vector<std::vector<std::uint8_t>>;

PinnedMasks collect_pinned(const ModelConfig& cfg, const MixerLayout& layout,
                           const ModelParams<float>& params);

// Bias-corrected Adam. Pinned entries are never touched. Throws NumericError
// naming the tensor and index if any gradient is not finite; in that case no
// parameter or moment is modified.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads,
               AdamState<T>& state, const TrainConfig& cfg,
               const PinnedMasks& pinned);

// ---- training loop ------------------------------------------------------------

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  RankingResult metrics;
  double seconds = 0.0;
  std::size_t empty_batches = 0;  // batches where every target was ignored
};

enum class StopReason { kPatience, kMaxEpochs, kDiverged };
std::string_view to_string(StopReason r);

struct TrainResult {
  ModelParams<float> best_params;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  std::vector<EpochRecord> history;
  StopReason stop_reason = StopReason::kMaxEpochs;
};

struct TrainHooks {
  // Replaces the built-in test-set evaluation (used by tests).
  std::function<RankingResult(const ModelParams<float>&, std::size_t epoch)>
      evaluator;
  // Called after every epoch, e.g. to append a JSON-lines log record.
  std::function<void(const EpochRecord&)> on_epoch;
};

// Named sub-streams of the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0);

// Reads the eval metric ("HR@10", "NDCG@5", ...) from a result.
double metric_value(const RankingResult& r, const std::string& metric);

// Loss of one batch of training windows (mean over windows, sum within) and,
// when grads is non-null, its gradient. `dropout_seed` seeds one stream per
// window so results do not depend on processing order.
template <typename T>
double batch_loss(const ModelParams<T>& params, const ModelConfig& cfg,
                  const MixerLayout& layout,
                  std::span<const TrainWindow* const> windows, bool training,
                  std::uint64_t dropout_seed, ModelParams<T>* grads,
                  std::size_t* counted = nullptr);

TrainResult train(const SplitDataset& split, const ModelConfig& mcfg,
                  const TrainConfig& tcfg, const TrainHooks& hooks = {});

}  // namespace trimlp
