// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace trimlp {

using json = nlohmann::json;

std::optional<LogFormat> parse_log_format(std::string_view name) {
  if (name == "tsv") return LogFormat::kTsv;
  if (name == "csv") return LogFormat::kCsv;
  if (name == "movielens") return LogFormat::kMovieLens;
  return std::nullopt;
}

namespace {

struct Layout {
  char sep;
  std::size_t user_col, item_col, time_col;
};

Layout layout_for(LogFormat f) {
  switch (f) {
    case LogFormat::kTsv: return {'\t', 0, 1, 2};
    case LogFormat::kCsv: return {',', 0, 1, 2};
    case LogFormat::kMovieLens: return {'\t', 0, 1, 3};
  }
  return {'\t', 0, 1, 2};
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const std::size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

}  // namespace

std::vector<Interaction> parse_interactions(std::string_view text,
                                            LogFormat format,
                                            std::string_view source) {
  const Layout layout = layout_for(format);
  const std::size_t needed =
      std::max({layout.user_col, layout.item_col, layout.time_col}) + 1;
  std::vector<Interaction> out;
  std::vector<std::string> bad;
  std::size_t bad_count = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto cols = split(line, layout.sep);
    std::string problem;
    std::int64_t ts = 0;
    if (cols.size() < needed) {
      problem = "expected at least " + std::to_string(needed) + " columns";
    } else {
      const std::string_view t = trim(cols[layout.time_col]);
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), ts);
      if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        problem = "unparseable timestamp '" + std::string(t) + "'";
      } else if (ts < 0) {
        problem = "negative timestamp";
      } else if (trim(cols[layout.user_col]).empty() ||
                 trim(cols[layout.item_col]).empty()) {
        problem = "empty user or item";
      }
    }
    if (!problem.empty()) {
      ++bad_count;
      if (bad.size() < 10) {
        bad.push_back("line " + std::to_string(line_no) + ": " + problem);
      }
    } else {
      out.push_back({std::string(trim(cols[layout.user_col])),
                     std::string(trim(cols[layout.item_col])), ts});
    }
    if (end == text.size()) break;
  }
  if (bad_count > 0) {
    std::ostringstream msg;
    msg << source << ": " << bad_count << " malformed row(s)";
    for (const auto& b : bad) msg << "; " << b;
    throw IngestionError(msg.str());
  }
  return out;
}

std::vector<Interaction> load_interactions(const std::filesystem::path& path,
                                           LogFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IngestionError("cannot open interaction log '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_interactions(buf.str(), format, path.string());
}

DatasetStats compute_stats(const SequenceDataset& ds) {
  DatasetStats s;
  s.users = ds.sequences.size();
  s.items = ds.vocab();
  for (const auto& seq : ds.sequences) s.interactions += seq.size();
  if (s.users > 0 && s.items > 0) {
    s.sparsity = 1.0 - static_cast<double>(s.interactions) /
                           (static_cast<double>(s.users) * static_cast<double>(s.items));
  }
  return s;
}

SequenceDataset filter_dataset(const std::vector<Interaction>& raw,
                               const FilterOptions& opt) {
  if (raw.empty()) throw DatasetError("no interactions to filter");

  std::unordered_map<std::string, std::size_t> item_count;
  for (const auto& x : raw) ++item_count[x.item];

  std::unordered_map<std::string, std::size_t> user_count;
  for (const auto& x : raw) {
    if (item_count[x.item] >= opt.min_item) ++user_count[x.user];
  }

  SequenceDataset ds;
  ds.item_ids.push_back("<pad>");
  std::unordered_map<std::string, std::size_t> user_index;
  std::unordered_map<std::string, ItemId> item_index;
  // (timestamp, file order, item) per kept user.
  std::vector<std::vector<std::pair<std::int64_t, ItemId>>> events;
  for (const auto& x : raw) {
    if (item_count[x.item] < opt.min_item) continue;
    if (user_count[x.user] < opt.min_user) continue;
    auto [uit, new_user] = user_index.try_emplace(x.user, ds.user_ids.size());
    if (new_user) {
      ds.user_ids.push_back(x.user);
      events.emplace_back();
    }
    auto [iit, new_item] =
        item_index.try_emplace(x.item, static_cast<ItemId>(ds.item_ids.size()));
    if (new_item) ds.item_ids.push_back(x.item);
    events[uit->second].emplace_back(x.timestamp, iit->second);
  }
  if (ds.user_ids.empty()) {
    throw DatasetError("dataset too sparse: nothing left after filtering with "
                       "min_user=" + std::to_string(opt.min_user) +
                       " min_item=" + std::to_string(opt.min_item));
  }

  ds.sequences.reserve(events.size());
  for (auto& ev : events) {
    std::stable_sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
      return a.first < b.first;
    });
    std::vector<ItemId> seq;
    seq.reserve(ev.size());
    for (const auto& e : ev) seq.push_back(e.second);
    ds.sequences.push_back(std::move(seq));
  }
  ds.stats = compute_stats(ds);

  std::vector<std::size_t> kept_count(ds.item_ids.size(), 0);
  for (const auto& seq : ds.sequences) {
    for (ItemId i : seq) ++kept_count[static_cast<std::size_t>(i)];
  }
  for (std::size_t i = 1; i < kept_count.size(); ++i) {
    if (kept_count[i] < opt.min_item) ++ds.residual_item_violations;
  }
  return ds;
}

SequenceDataset dataset_from_sequences(std::vector<std::vector<ItemId>> sequences,
                                       std::size_t vocab) {
  SequenceDataset ds;
  ds.item_ids.push_back("<pad>");
  for (std::size_t i = 1; i <= vocab; ++i) ds.item_ids.push_back(std::to_string(i));
  for (std::size_t u = 0; u < sequences.size(); ++u) {
    for (ItemId id : sequences[u]) {
      if (id < 1 || static_cast<std::size_t>(id) > vocab) {
        throw VocabularyError("sequence item " + std::to_string(id) +
                              " outside [1, " + std::to_string(vocab) + "]");
      }
    }
    ds.user_ids.push_back(std::to_string(u));
  }
  ds.sequences = std::move(sequences);
  ds.stats = compute_stats(ds);
  return ds;
}

std::vector<std::int32_t> shifted_targets(const TokenWindow& window) {
  const std::size_t n = window.ids.size();
  std::vector<std::int32_t> targets(n, kIgnoreTarget);
  for (std::size_t p = 0; p + 1 < n; ++p) {
    if (window.ids[p] == kPadItem || window.ids[p + 1] == kPadItem) continue;
    targets[p] = window.ids[p + 1];
  }
  return targets;
}

SplitDataset build_windows(const SequenceDataset& ds, std::size_t n) {
  if (n < 2) throw ConfigError("window length n must be at least 2");
  SplitDataset split;
  split.n = n;
  split.vocab = ds.vocab();
  for (std::size_t u = 0; u < ds.sequences.size(); ++u) {
    const auto& seq = ds.sequences[u];
    if (seq.size() < 2) {
      ++split.skipped_users;
      continue;
    }
    const std::span<const ItemId> prefix(seq.data(), seq.size() - 1);

    // Chunk from the newest end so the most recent window is full.
    std::vector<TrainWindow> user_windows;
    for (std::size_t end = prefix.size(); end > 0;) {
      const std::size_t begin = end > n ? end - n : 0;
      TrainWindow w;
      w.user = u;
      w.input = TokenWindow::from_items(prefix.subspan(begin, end - begin), n);
      w.targets = shifted_targets(w.input);
      end = begin;
      const bool any = std::any_of(w.targets.begin(), w.targets.end(),
                                   [](std::int32_t t) { return t != kIgnoreTarget; });
      if (!any) {
        ++split.dropped_windows;
        continue;
      }
      user_windows.push_back(std::move(w));
    }
    std::reverse(user_windows.begin(), user_windows.end());
    for (auto& w : user_windows) split.train.push_back(std::move(w));

    TestCase tc;
    tc.user = u;
    tc.target = seq.back();
    const std::size_t take = std::min(prefix.size(), n - 1);
    tc.input = TokenWindow::from_items(prefix.subspan(prefix.size() - take), n,
                                       /*reserved_tail=*/true);
    tc.history.assign(prefix.begin(), prefix.end());
    split.test.push_back(std::move(tc));
  }
  return split;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count,
                                                    std::size_t batch,
                                                    Rng& rng) {
  if (batch == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with our own index draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = count; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < count; b += batch) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(b);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(count, b + batch));
    batches.emplace_back(first, last);
  }
  return batches;
}

void write_processed(const SequenceDataset& ds,
                     const std::filesystem::path& dir, std::size_t max_len) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "sequences.jsonl", std::ios::binary);
    if (!out) throw DatasetError("cannot write " + (dir / "sequences.jsonl").string());
    for (std::size_t u = 0; u < ds.sequences.size(); ++u) {
      out << json{{"user", ds.user_ids[u]}, {"items", ds.sequences[u]}}.dump()
          << '\n';
    }
  }
  {
    std::ofstream out(dir / "items.json", std::ios::binary);
    out << json(ds.item_ids).dump() << '\n';
  }
  const DatasetStats& s = ds.stats;
  json stats = {{"users", s.users},
                {"items", s.items},
                {"interactions", s.interactions},
                {"sparsity", s.sparsity},
                {"max_len", max_len},
                {"residual_item_violations", ds.residual_item_violations}};
  std::ofstream out(dir / "stats.json", std::ios::binary);
  out << stats.dump(2) << '\n';
}

SequenceDataset read_processed(const std::filesystem::path& dir) {
  std::ifstream stats_in(dir / "stats.json");
  std::ifstream seq_in(dir / "sequences.jsonl");
  if (!stats_in || !seq_in) {
    throw DatasetError("'" + dir.string() +
                       "' is not a processed dataset (needs stats.json and "
                       "sequences.jsonl)");
  }
  json stats;
  try {
    stats = json::parse(stats_in);
  } catch (const json::exception& e) {
    throw DatasetError("bad stats.json: " + std::string(e.what()));
  }
  const std::size_t vocab = stats.at("items").get<std::size_t>();

  SequenceDataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<ItemId>> seqs;
  std::vector<std::string> users;
  while (std::getline(seq_in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json rec = json::parse(line);
      users.push_back(rec.at("user").get<std::string>());
      seqs.push_back(rec.at("items").get<std::vector<ItemId>>());
    } catch (const json::exception& e) {
      throw DatasetError("sequences.jsonl line " + std::to_string(line_no) +
                         ": " + e.what());
    }
  }
  ds = dataset_from_sequences(std::move(seqs), vocab);
  ds.user_ids = std::move(users);
  std::ifstream items_in(dir / "items.json");
  if (items_in) {
    auto ids = json::parse(items_in).get<std::vector<std::string>>();
    if (ids.size() == vocab + 1) ds.item_ids = std::move(ids);
  }
  ds.residual_item_violations =
      stats.value("residual_item_violations", std::size_t{0});
  return ds;
}

}  // namespace trimlp
