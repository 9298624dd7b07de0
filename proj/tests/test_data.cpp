// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "trimlp/data.hpp"

using namespace trimlp;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<Interaction> log_of(const std::vector<std::tuple<std::string, std::string, int>>& rows) {
  std::vector<Interaction> out;
  for (const auto& [u, i, t] : rows) out.push_back({u, i, t});
  return out;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("parsing a tab-separated row") {
  const auto rows = parse_interactions("u1\ti9\t100", LogFormat::kTsv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0] == Interaction{"u1", "i9", 100});
  CHECK(parse_interactions("", LogFormat::kTsv).empty());
  CHECK(parse_interactions("a,b,5,extra\r\n\nc,d,6\n", LogFormat::kCsv).size() == 2);
  const auto ml = parse_interactions("196\t242\t3\t881250949\n", LogFormat::kMovieLens);
  CHECK(ml[0] == Interaction{"196", "242", 881250949});
}

TEST_CASE("malformed rows are reported with their line numbers, first ten only") {
  std::string text = "u\ti\t1\n";
  for (int k = 0; k < 12; ++k) text += "u\ti\tnot-a-time\n";
  text += "u\ti\n";
  try {
    (void)parse_interactions(text, LogFormat::kTsv, "log.tsv");
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("log.tsv: 13 malformed") != std::string::npos);
    CHECK(msg.find("line 2:") != std::string::npos);
    CHECK(msg.find("line 11:") != std::string::npos);
    CHECK(msg.find("line 12:") == std::string::npos);
  }
  CHECK_THROWS_AS(parse_interactions("u\ti\t-5\n", LogFormat::kTsv), IngestionError);
  CHECK_THROWS_AS(load_interactions("/nonexistent/path.tsv", LogFormat::kTsv), IngestionError);
  CHECK_FALSE(parse_log_format("parquet").has_value());
}

TEST_CASE("filter drops an inactive user") {
  std::vector<Interaction> raw;
  for (int u = 0; u < 3; ++u)
    for (int k = 0; k < 25; ++k)
      raw.push_back({"u" + std::to_string(u), "i" + std::to_string(k % 12), k});
  for (int k = 0; k < 5; ++k) raw.push_back({"lazy", "i" + std::to_string(k), k});
  const auto ds = filter_dataset(raw, {20, 5});
  CHECK(ds.user_ids == std::vector<std::string>{"u0", "u1", "u2"});
  CHECK(ds.stats.users == 3);
  CHECK(ds.stats.items == 12);
  CHECK(ds.stats.interactions == 75);
  CHECK(ds.stats.sparsity == doctest::Approx(1.0 - 75.0 / 36.0));
}

TEST_CASE("item threshold boundary: nine removed, ten kept") {
  std::vector<Interaction> raw;
  for (int u = 0; u < 10; ++u) {
    const std::string user = "u" + std::to_string(u);
    raw.push_back({user, "ten", u});
    if (u < 9) raw.push_back({user, "nine", u});
  }
  const auto ds = filter_dataset(raw, {1, 10});
  CHECK(ds.vocab() == 1);
  CHECK(ds.item_ids[1] == "ten");
}

TEST_CASE("sequences are sorted by time with ties kept in file order") {
  const auto raw = log_of({{"u", "c", 30}, {"u", "a", 10}, {"u", "x", 20}, {"u", "y", 20}, {"u", "b", 10}});
  const auto ds = filter_dataset(raw, {1, 1});
  std::vector<std::string> order;
  for (ItemId id : ds.sequences[0]) order.push_back(ds.item_ids[static_cast<std::size_t>(id)]);
  CHECK(order == std::vector<std::string>{"a", "b", "x", "y", "c"});
}

TEST_CASE("filter reports residual violations instead of iterating") {
  // "rare" survives the item pass with 2 uses but one user is then dropped.
  const auto raw = log_of({{"a", "rare", 1}, {"a", "common", 2}, {"b", "rare", 3},
                           {"b", "common", 4}, {"c", "common", 5}});
  const auto ds = filter_dataset(raw, {2, 2});
  CHECK(ds.user_ids == std::vector<std::string>{"a", "b"});
  CHECK_FALSE(ds.second_pass_would_change());
  const auto raw2 = log_of({{"a", "rare", 1}, {"a", "common", 2}, {"b", "rare", 3},
                            {"c", "common", 4}, {"c", "other", 5}, {"d", "other", 6},
                            {"d", "common", 7}});
  const auto ds2 = filter_dataset(raw2, {2, 2});
  // User b keeps a single interaction and is dropped, leaving "rare" with one.
  CHECK(ds2.residual_item_violations == 1);
  CHECK(ds2.second_pass_would_change());
}

TEST_CASE("filtering everything away is a dataset error") {
  CHECK_THROWS_AS(filter_dataset({}, {}), DatasetError);
  CHECK_THROWS_AS(filter_dataset(log_of({{"u", "i", 1}}), {20, 10}), DatasetError);
}

TEST_CASE("windows: short prefix is head padded") {
  // a b c then the test target d.
  const auto ds = dataset_from_sequences({{1, 2, 3, 4}}, 4);
  const auto split = build_windows(ds, 5);
  REQUIRE(split.train.size() == 1);
  CHECK(split.train[0].input.ids == std::vector<ItemId>{0, 0, 1, 2, 3});
  CHECK(split.train[0].targets ==
        std::vector<std::int32_t>{kIgnoreTarget, kIgnoreTarget, 2, 3, kIgnoreTarget});
  REQUIRE(split.test.size() == 1);
  CHECK(split.test[0].target == 4);
  CHECK(split.test[0].input.ids == std::vector<ItemId>{0, 1, 2, 3, 0});
  CHECK(split.test[0].input.query_row() == 3);
  CHECK(split.test[0].history == std::vector<ItemId>{1, 2, 3});
}

TEST_CASE("windows: shift of [pad, a, b, c]") {
  const auto w = TokenWindow::from_items(std::vector<ItemId>{7, 8, 9}, 4);
  CHECK(shifted_targets(w) == std::vector<std::int32_t>{kIgnoreTarget, 8, 9, kIgnoreTarget});
}

TEST_CASE("windows: a 130-item prefix chunks backwards into 64, 64 and 2") {
  std::vector<ItemId> seq(131);
  std::iota(seq.begin(), seq.end(), 1);
  const auto split = build_windows(dataset_from_sequences({seq}, 131), 64);
  REQUIRE(split.train.size() == 3);
  const auto& oldest = split.train[0].input;
  CHECK(oldest.pad_len == 62);
  CHECK(oldest.ids[62] == 1);
  CHECK(oldest.ids[63] == 2);
  CHECK(split.train[1].input.pad_len == 0);
  CHECK(split.train[1].input.ids.front() == 3);
  CHECK(split.train[2].input.ids.front() == 67);
  CHECK(split.train[2].input.ids.back() == 130);
  std::vector<ItemId> seen;
  for (const auto& w : split.train)
    for (ItemId id : w.input.ids)
      if (id != kPadItem) seen.push_back(id);
  CHECK(seen == std::vector<ItemId>(seq.begin(), seq.end() - 1));
  CHECK(split.test[0].target == 131);
}

TEST_CASE("windows: users with fewer than two events are skipped, empty chunks dropped") {
  const auto ds = dataset_from_sequences({{1}, {1, 2}, {1, 2, 3, 4, 5, 6}}, 6);
  const auto split = build_windows(ds, 4);
  CHECK(split.skipped_users == 1);
  CHECK(split.test.size() == 2);
  // Prefix [1] of the second user has no target; prefix 1..5 with n=4 leaves a
  // one-item oldest chunk [1], which has no target either.
  CHECK(split.dropped_windows == 2);
  CHECK(split.train.size() == 1);
  CHECK_THROWS_AS(build_windows(ds, 1), ConfigError);
}

TEST_CASE("window properties: pad discipline, chronology, no leakage") {
  std::mt19937_64 rng(3);
  std::vector<std::vector<ItemId>> seqs;
  for (int u = 0; u < 40; ++u) {
    std::vector<ItemId> s(2 + rng() % 90);
    for (auto& id : s) id = static_cast<ItemId>(1 + rng() % 30);
    seqs.push_back(s);
  }
  const auto ds = dataset_from_sequences(seqs, 30);
  const auto split = build_windows(ds, 16);
  std::vector<std::size_t> consumed(seqs.size(), 0);
  for (const auto& w : split.train) {
    const auto& ids = w.input.ids;
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK((ids[i] == kPadItem) == (i < w.input.pad_len));
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == kPadItem) CHECK(w.targets[i] == kIgnoreTarget);
    consumed[w.user] += ids.size() - w.input.pad_len;
  }
  for (const auto& tc : split.test) {
    // Training windows cover at most the prefix, never the target event.
    CHECK(consumed[tc.user] <= seqs[tc.user].size() - 1);
    CHECK(tc.target == seqs[tc.user].back());
  }
}

TEST_CASE("epoch batches: sizes, determinism and coverage") {
  Rng a(5), b(5), c(6);
  const auto ba = epoch_batches(130, 64, a);
  REQUIRE(ba.size() == 3);
  CHECK(ba[0].size() == 64);
  CHECK(ba[1].size() == 64);
  CHECK(ba[2].size() == 2);
  CHECK(ba == epoch_batches(130, 64, b));
  CHECK_FALSE(ba == epoch_batches(130, 64, c));
  std::multiset<std::size_t> all;
  for (const auto& batch : ba) all.insert(batch.begin(), batch.end());
  std::multiset<std::size_t> want;
  for (std::size_t i = 0; i < 130; ++i) want.insert(i);
  CHECK(all == want);
  CHECK_THROWS_AS(epoch_batches(3, 0, a), ConfigError);
}

TEST_CASE("processed output round-trips and is byte-stable") {
  const auto dir = std::filesystem::temp_directory_path() / "trimlp_data_test";
  std::filesystem::remove_all(dir);
  const auto raw = log_of({{"u1", "x", 1}, {"u1", "y", 2}, {"u2", "y", 3}, {"u2", "x", 4}});
  const auto ds = filter_dataset(raw, {1, 1});
  write_processed(ds, dir / "a", 64);
  write_processed(ds, dir / "b", 64);
  for (const char* f : {"sequences.jsonl", "stats.json", "items.json"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  const auto back = read_processed(dir / "a");
  CHECK(back.sequences == ds.sequences);
  CHECK(back.user_ids == ds.user_ids);
  CHECK(back.item_ids == ds.item_ids);
  CHECK(back.stats.interactions == 4);
  CHECK_THROWS_AS(read_processed(dir / "missing"), DatasetError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ML-100K raw file loads 100,000 rows") {
  const std::filesystem::path path = TRIMLP_SOURCE_DIR "/data/ml-100k/u.data";
  if (!std::filesystem::exists(path)) {
    MESSAGE("skipped: " << path << " not present (run tools/fetch_ml100k.py)");
    return;
  }
  CHECK(load_interactions(path, LogFormat::kMovieLens).size() == 100000);
}

}  // TEST_SUITE
