// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Interaction log ingestion, popularity/activity filtering, leave-one-out
// split and windowing.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trimlp/layers.hpp"
#include "trimlp/model.hpp"

namespace trimlp {

struct Interaction {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

// tsv / csv: user, item, timestamp[, ignored...]
// movielens: tab separated user, item, rating, timestamp (ML-100K u.data)
enum class LogFormat { kTsv, kCsv, kMovieLens };

std::optional<LogFormat> parse_log_format(std::string_view name);

std::vector<Interaction> load_interactions(const std::filesystem::path& path,
                                           LogFormat format);

// Parses from memory; `source` only labels error messages.
std::vector<Interaction> parse_interactions(std::string_view text,
                                            LogFormat format,
                                            std::string_view source = "<memory>");

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double sparsity = 0.0;  // 1 - interactions / (users * items)
};

struct SequenceDataset {
  std::vector<std::string> user_ids;  // dense user index -> external id
  std::vector<std::string> item_ids;  // dense item id -> external id, [0] = pad
  std::vector<std::vector<ItemId>> sequences;  // chronological, per user
  DatasetStats stats;
  // Kept items that fell below the item threshold once users were dropped.
  std::size_t residual_item_violations = 0;

  bool second_pass_would_change() const { return residual_item_violations > 0; }
  std::size_t vocab() const { return item_ids.size() - 1; }
};

struct FilterOptions {
  std::size_t min_user = 20;  // drop users with fewer interactions
  std::size_t min_item = 10;  // drop items with fewer interactions
};

// One pass: items below min_item are removed first, then users below
// min_user. Each user's list is sorted by timestamp, ties kept in file order.
SequenceDataset filter_dataset(const std::vector<Interaction>& raw,
                               const FilterOptions& opt = {});

// Builds a dataset directly from dense sequences (synthetic data, tests).
SequenceDataset dataset_from_sequences(std::vector<std::vector<ItemId>> sequences,
                                       std::size_t vocab);

DatasetStats compute_stats(const SequenceDataset& ds);

inline constexpr std::int32_t kIgnoreTarget = -1;

struct TrainWindow {
  TokenWindow input;
  std::vector<std::int32_t> targets;  // item id or kIgnoreTarget per position
  std::size_t user = 0;
};

struct TestCase {
  std::size_t user = 0;
  TokenWindow input;  // reserved_tail window over the last <= n-1 history items
  ItemId target = 0;
  std::vector<ItemId> history;  // every item before the target
};

struct SplitDataset {
  std::size_t n = 0;
  std::size_t vocab = 0;
  std::vector<TrainWindow> train;
  std::vector<TestCase> test;
  std::size_t skipped_users = 0;   // fewer than 2 interactions
  std::size_t dropped_windows = 0; // chunks with no countable target
};

// Leave-one-out: each user's last item is the test target. The remaining
// prefix is cut from its newest end into non-overlapping windows of n; the
// oldest chunk is head-padded. Targets are the inputs shifted left by one,
// ignored at pad positions and at the final position.
SplitDataset build_windows(const SequenceDataset& ds, std::size_t n);

// Target vector for a training window (exposed for tests).
std::vector<std::int32_t> shifted_targets(const TokenWindow& window);

// Shuffled batches of window indices for one epoch; the last batch may be
// short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count,
                                                    std::size_t batch, Rng& rng);

// Processed-dataset directory: sequences.jsonl + stats.json.
void write_processed(const SequenceDataset& ds,
                     const std::filesystem::path& dir, std::size_t max_len);
SequenceDataset read_processed(const std::filesystem::path& dir);

}  // namespace trimlp
