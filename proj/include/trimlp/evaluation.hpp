// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "trimlp/data.hpp"
#include "trimlp/model.hpp"

namespace trimlp {

// 1-based rank of `target` in a full-catalog logits row (index c is item c+1).
// Ties are broken by item id, matching topk_from_logits.
std::size_t rank_of_target(std::span<const float> logits, ItemId target);

struct HitNdcg {
  double hr = 0.0;
  double ndcg = 0.0;
};

HitNdcg hr_ndcg(std::size_t rank, std::size_t k);

struct RankingResult {
  std::map<std::size_t, double> hr;
  std::map<std::size_t, double> ndcg;
  std::size_t users = 0;
};

struct EvalOptions {
  std::vector<std::size_t> ks{5, 10};
  // Exclude previously seen items (other than the target) from ranking.
  bool mask_history = false;
  std::size_t threads = 1;
};

// Per-user ranks, in test-case order.
std::vector<std::size_t> target_ranks(const ModelParams<float>& p,
                                      const ModelConfig& cfg,
                                      const MixerLayout& layout,
                                      std::span<const TestCase> cases,
                                      const EvalOptions& opt = {});

RankingResult aggregate_ranks(std::span<const std::size_t> ranks,
                              std::span<const std::size_t> ks);

RankingResult evaluate(const ModelParams<float>& p, const ModelConfig& cfg,
                       std::span<const TestCase> cases,
                       const EvalOptions& opt = {});

struct BenchResult {
  double mean_s = 0.0;
  double std_s = 0.0;
  double min_s = 0.0;
  double max_s = 0.0;
  std::size_t rounds = 0;
  std::vector<double> round_s;
};

// Wall-clock of full evaluation passes (forward + ranking, no data loading)
// after one untimed warmup pass.
BenchResult bench_inference(const ModelParams<float>& p, const ModelConfig& cfg,
                            std::span<const TestCase> cases, std::size_t rounds,
                            std::size_t threads = 1);

}  // namespace trimlp
