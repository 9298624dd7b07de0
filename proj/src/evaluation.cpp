// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "trimlp/error.hpp"

namespace trimlp {

std::size_t rank_of_target(std::span<const float> logits, ItemId target) {
  if (target < 1 || static_cast<std::size_t>(target) > logits.size()) {
    throw VocabularyError("target item " + std::to_string(target) +
                          " outside [1, " + std::to_string(logits.size()) + "]");
  }
  const std::size_t t = static_cast<std::size_t>(target) - 1;
  const float score = logits[t];
  std::size_t rank = 1;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (logits[c] > score || (logits[c] == score && c < t)) ++rank;
  }
  return rank;
}

HitNdcg hr_ndcg(std::size_t rank, std::size_t k) {
  if (rank == 0 || k == 0) throw ConfigError("rank and k must be at least 1");
  if (rank > k) return {};
  return {1.0, 1.0 / std::log2(static_cast<double>(rank) + 1.0)};
}

std::vector<std::size_t> target_ranks(const ModelParams<float>& p,
                                      const ModelConfig& cfg,
                                      const MixerLayout& layout,
                                      std::span<const TestCase> cases,
                                      const EvalOptions& opt) {
  std::vector<std::size_t> ranks(cases.size(), 0);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      const TestCase& tc = cases[u];
      tc.input.validate(cfg.n, cfg.vocab);
      std::vector<float> logits =
          score_row(p, cfg, layout, tc.input, tc.input.query_row());
      if (opt.mask_history) {
        for (ItemId h : tc.history) {
          if (h != tc.target) {
            logits[static_cast<std::size_t>(h) - 1] =
                std::numeric_limits<float>::lowest();
          }
        }
      }
      ranks[u] = rank_of_target(logits, tc.target);
    }
  };
  const std::size_t threads =
      std::clamp<std::size_t>(opt.threads, 1, std::max<std::size_t>(cases.size(), 1));
  if (threads == 1) {
    work(0, cases.size());
    return ranks;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (cases.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(cases.size(), begin + chunk);
    pool.emplace_back([&, t, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return ranks;
}

RankingResult aggregate_ranks(std::span<const std::size_t> ranks,
                              std::span<const std::size_t> ks) {
  if (ranks.empty()) throw DatasetError("cannot evaluate an empty test set");
  RankingResult r;
  r.users = ranks.size();
  for (std::size_t k : ks) {
    double hr = 0.0;
    double ndcg = 0.0;
    for (std::size_t rank : ranks) {
      const HitNdcg h = hr_ndcg(rank, k);
      hr += h.hr;
      ndcg += h.ndcg;
    }
    r.hr[k] = hr / static_cast<double>(ranks.size());
    r.ndcg[k] = ndcg / static_cast<double>(ranks.size());
  }
  double prev_hr = 0.0;
  for (const auto& [k, hr] : r.hr) {
    if (r.ndcg.at(k) > hr || hr < prev_hr) {
      throw NumericError("metric invariant violated at k=" + std::to_string(k));
    }
    prev_hr = hr;
  }
  return r;
}

RankingResult evaluate(const ModelParams<float>& p, const ModelConfig& cfg,
                       std::span<const TestCase> cases, const EvalOptions& opt) {
  if (cases.empty()) throw DatasetError("cannot evaluate an empty test set");
  const MixerLayout layout = cfg.mixer_layout();
  const auto ranks = target_ranks(p, cfg, layout, cases, opt);
  return aggregate_ranks(ranks, opt.ks);
}

BenchResult bench_inference(const ModelParams<float>& p, const ModelConfig& cfg,
                            std::span<const TestCase> cases, std::size_t rounds,
                            std::size_t threads) {
  if (rounds == 0) throw ConfigError("bench rounds must be at least 1");
  if (cases.empty()) throw DatasetError("cannot benchmark an empty test set");
  const MixerLayout layout = cfg.mixer_layout();
  EvalOptions opt;
  opt.threads = threads;
  // Keeps the ranks observable so the passes are not optimized away.
  std::size_t sink = 0;
  for (std::size_t r : target_ranks(p, cfg, layout, cases, opt)) sink += r;

  BenchResult b;
  b.rounds = rounds;
  for (std::size_t i = 0; i < rounds; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t r : target_ranks(p, cfg, layout, cases, opt)) sink += r;
    const auto t1 = std::chrono::steady_clock::now();
    b.round_s.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  double sum = 0.0;
  for (double s : b.round_s) sum += s;
  b.mean_s = sum / static_cast<double>(rounds);
  double var = 0.0;
  for (double s : b.round_s) var += (s - b.mean_s) * (s - b.mean_s);
  b.std_s = std::sqrt(var / static_cast<double>(rounds));
  b.min_s = *std::min_element(b.round_s.begin(), b.round_s.end());
  b.max_s = *std::max_element(b.round_s.begin(), b.round_s.end());
  [[maybe_unused]] volatile std::size_t keep = sink;
  return b;
}

}  // namespace trimlp
