// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "helpers.hpp"
#include "trimlp/model.hpp"

using namespace trimlp;
using testing::random_tensor;

namespace {

ModelConfig toy_config(MixerVariant v = MixerVariant::kFull,
                       Combine c = Combine::kParallelAdd) {
  ModelConfig cfg;
  cfg.n = 8;
  cfg.d = 4;
  cfg.blocks = 1;
  cfg.sessions = 2;
  cfg.dropout = 0.0;
  cfg.vocab = 12;
  cfg.variant = v;
  cfg.combine = c;
  return cfg;
}

// Randomizes every learnable entry that is not pinned.
template <typename T>
void jitter(ModelParams<T>& p, const ModelConfig& cfg, std::mt19937_64& rng) {
  const MixerLayout layout = cfg.mixer_layout();
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  p.for_each([&](const std::string& name, Tensor<T>& t) {
    const auto pinned = pinned_entries(cfg, layout, name, t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      if (pinned.empty() || !pinned[i]) t[i] = static_cast<T>(u(rng));
  });
}

std::vector<ItemId> random_ids(std::size_t n, std::size_t vocab, std::size_t pads,
                               std::mt19937_64& rng) {
  std::uniform_int_distribution<ItemId> item(1, static_cast<ItemId>(vocab));
  std::vector<ItemId> ids(n, kPadItem);
  for (std::size_t i = pads; i < n; ++i) ids[i] = item(rng);
  return ids;
}

// Layer-by-layer recomputation of the full/parallel-add model from plain loops.
oracle::Mat composed_forward(const ModelParams<double>& p, const ModelConfig& cfg,
                             const std::vector<ItemId>& ids) {
  using oracle::Mat;
  const std::size_t n = cfg.n, d = cfg.d;
  auto vec = [](const Tensor<double>& t) {
    return std::vector<double>(t.values().begin(), t.values().end());
  };
  Mat x = oracle::zeros(n, d);
  for (std::size_t i = 0; i < n; ++i)
    if (ids[i] != kPadItem)
      for (std::size_t c = 0; c < d; ++c) x[i][c] = p.embedding(static_cast<std::size_t>(ids[i]), c);
  for (const auto& blk : p.blocks) {
    Mat h(n);
    for (std::size_t i = 0; i < n; ++i)
      h[i] = oracle::layer_norm_row(x[i], vec(blk.norm1.alpha), vec(blk.norm1.beta), cfg.layer_norm_eps);
    const Mat g = oracle::cumulative_mix(h, testing::to_mat(blk.mixer.raw_global), n);
    const Mat l = oracle::cumulative_mix(h, testing::to_mat(blk.mixer.raw_local), n / cfg.sessions);
    Mat y = x;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c) y[i][c] += g[i][c] + l[i][c];
    for (std::size_t i = 0; i < n; ++i) {
      const auto yn = oracle::layer_norm_row(y[i], vec(blk.norm2.alpha), vec(blk.norm2.beta),
                                             cfg.layer_norm_eps);
      std::vector<double> hidden(4 * d);
      for (std::size_t k = 0; k < 4 * d; ++k) {
        double s = blk.ffn.b1[k];
        for (std::size_t c = 0; c < d; ++c) s += yn[c] * blk.ffn.w1(c, k);
        hidden[k] = oracle::gelu(s);
      }
      for (std::size_t c = 0; c < d; ++c) {
        double s = blk.ffn.b2[c];
        for (std::size_t k = 0; k < 4 * d; ++k) s += hidden[k] * blk.ffn.w2(k, c);
        x[i][c] = y[i][c] + s;
      }
    }
  }
  Mat logits = oracle::matmul(x, testing::to_mat(p.head_w));
  for (auto& row : logits)
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += p.head_b[c];
  return logits;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("config validation") {
  ModelConfig cfg = toy_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.sessions = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = toy_config();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = toy_config();
  cfg.vocab = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("token windows: head padding and the reserved tail") {
  const std::vector<ItemId> items{5, 6, 7};
  const auto w = TokenWindow::from_items(items, 5);
  CHECK(w.ids == std::vector<ItemId>{0, 0, 5, 6, 7});
  CHECK(w.pad_len == 2);
  CHECK(w.query_row() == 4);
  const auto t = TokenWindow::from_items(items, 5, true);
  CHECK(t.ids == std::vector<ItemId>{0, 5, 6, 7, 0});
  CHECK(t.query_row() == 3);
  CHECK_THROWS_AS(TokenWindow::from_items(items, 3, true), ConfigError);
  CHECK_NOTHROW(t.validate(5, 7));
  CHECK_THROWS_AS(t.validate(5, 6), VocabularyError);
  CHECK_THROWS_AS(t.validate(6, 7), ConfigError);
}

TEST_CASE("all-pad window with zero non-mixer weights yields the head bias") {
  const ModelConfig cfg = toy_config();
  Rng rng(1);
  ModelParams<double> p = init_params<double>(cfg, rng);
  p.for_each([](const std::string& name, Tensor<double>& t) {
    if (name.find("mixer") == std::string::npos && name.find("norm") == std::string::npos) t.fill(0.0);
  });
  std::mt19937_64 r2(2);
  p.head_b = random_tensor(Shape{cfg.vocab}, r2);
  const std::vector<ItemId> pads(cfg.n, kPadItem);
  const auto logits = forward(p, cfg, cfg.mixer_layout(), pads);
  for (std::size_t i = 0; i < cfg.n; ++i)
    for (std::size_t c = 0; c < cfg.vocab; ++c) CHECK(logits(i, c) == p.head_b[c]);
}

TEST_CASE("forward matches the layer-composition oracle") {
  const ModelConfig cfg = toy_config();
  Rng rng(3);
  ModelParams<double> p = init_params<double>(cfg, rng);
  std::mt19937_64 r2(4);
  jitter(p, cfg, r2);
  const auto ids = random_ids(cfg.n, cfg.vocab, 2, r2);
  const auto got = forward(p, cfg, cfg.mixer_layout(), ids);
  CHECK(testing::max_abs_diff(got, composed_forward(p, cfg, ids)) < 1e-6);
}

TEST_CASE("end-to-end causality for every variant except square") {
  std::mt19937_64 rng(5);
  for (auto v : {MixerVariant::kFull, MixerVariant::kEye, MixerVariant::kGlobalOnly,
                 MixerVariant::kLocalOnly}) {
    for (auto c : {Combine::kParallelAdd, Combine::kParallelConcat, Combine::kSerialGL}) {
      ModelConfig cfg = toy_config(v, c);
      cfg.blocks = 2;
      Rng init(rng());
      ModelParams<float> p = init_params<float>(cfg, init);
      jitter(p, cfg, rng);
      const auto layout = cfg.mixer_layout();
      auto ids = random_ids(cfg.n, cfg.vocab, 0, rng);
      const auto before = forward(p, cfg, layout, ids);
      const std::size_t pos = rng() % cfg.n;
      for (std::size_t i = pos; i < cfg.n; ++i)
        ids[i] = static_cast<ItemId>(1 + (static_cast<std::size_t>(ids[i]) % cfg.vocab));
      const auto after = forward(p, cfg, layout, ids);
      CHECK(testing::bitwise_rows_equal(before, after, 0, pos));
    }
  }
}

TEST_CASE("perturbing the final token leaves earlier logits unchanged") {
  const ModelConfig cfg = toy_config();
  Rng rng(6);
  const auto p = init_params<float>(cfg, rng);
  std::vector<ItemId> ids{1, 2, 3, 4, 5, 6, 7, 8};
  const auto before = forward(p, cfg, cfg.mixer_layout(), ids);
  ids.back() = 12;
  const auto after = forward(p, cfg, cfg.mixer_layout(), ids);
  CHECK(testing::bitwise_rows_equal(before, after, 0, cfg.n - 1));
  CHECK_FALSE(testing::bitwise_rows_equal(before, after, cfg.n - 1, cfg.n));
}

TEST_CASE("parameters that do not match the config are rejected") {
  ModelConfig cfg = toy_config();
  Rng rng(7);
  const auto p = init_params<float>(cfg, rng);
  cfg.vocab = 13;
  const std::vector<ItemId> ids(cfg.n, 1);
  CHECK_THROWS_AS(forward(p, cfg, cfg.mixer_layout(), ids), ConfigError);
}

TEST_CASE("top-k examples") {
  const std::vector<float> logits{0.1f, 2.0f, -1.0f};
  CHECK(topk_from_logits(logits, 2) == std::vector<ItemId>{2, 1});
  const std::vector<float> flat(3, 0.5f);
  CHECK(topk_from_logits(flat, 3) == std::vector<ItemId>{1, 2, 3});
  CHECK_THROWS_AS(topk_from_logits(logits, 4), ConfigError);
}

TEST_CASE("predict_topk agrees with a linear scan of the final row") {
  const ModelConfig cfg = toy_config();
  Rng rng(8);
  auto p = init_params<float>(cfg, rng);
  std::mt19937_64 r2(9);
  jitter(p, cfg, r2);
  const auto layout = cfg.mixer_layout();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ItemId> items;
    for (std::size_t i = 0; i < 1 + r2() % (cfg.n - 1); ++i)
      items.push_back(static_cast<ItemId>(1 + r2() % cfg.vocab));
    const auto window = TokenWindow::from_items(items, cfg.n, true);
    const auto top = predict_topk(p, cfg, layout, window, 5);
    CHECK(top.size() == 5);
    const auto full = forward(p, cfg, layout, window.ids);
    const auto row = full.row(window.query_row());
    std::size_t best = 0;
    for (std::size_t c = 1; c < cfg.vocab; ++c)
      if (row[c] > row[best]) best = c;
    CHECK(top[0] == static_cast<ItemId>(best + 1));
    for (std::size_t k = 1; k < top.size(); ++k) {
      CHECK(top[k] != top[k - 1]);
      CHECK(row[static_cast<std::size_t>(top[k] - 1)] <= row[static_cast<std::size_t>(top[k - 1] - 1)]);
    }
  }
  CHECK_THROWS_AS(predict_topk(p, cfg, layout, TokenWindow::from_items({}, cfg.n, true), 13),
                  ConfigError);
}

TEST_CASE("param_count hand census") {
  ModelConfig cfg;
  cfg.n = 4;
  cfg.d = 2;
  cfg.blocks = 1;
  cfg.sessions = 2;
  cfg.vocab = 3;
  CHECK(param_count(cfg) == 99);
  Rng rng(1);
  CHECK(init_params<float>(cfg, rng).census() == 99);
  const std::size_t one = param_count(cfg);
  cfg.blocks = 2;
  CHECK(param_count(cfg) - one == 32 + 24 + 18 + 8);
}

TEST_CASE("param_count matches the runtime census") {
  ModelConfig cfg;
  cfg.vocab = 1152;
  Rng rng(2);
  CHECK(param_count(cfg) == init_params<float>(cfg, rng).census());
  std::mt19937_64 r(3);
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig c;
    c.n = std::size_t{1} << (r() % 6);
    c.sessions = std::size_t{1} << (r() % 6);
    if (c.sessions > c.n) c.sessions = c.n;
    c.d = 1 + r() % 9;
    c.blocks = 1 + r() % 3;
    c.vocab = 1 + r() % 40;
    c.variant = static_cast<MixerVariant>(r() % 5);
    c.combine = static_cast<Combine>(r() % 4);
    CAPTURE(trial);
    CHECK(param_count(c) == init_params<float>(c, rng).census());
  }
}

TEST_CASE("initialization pins the pad row and dropped mixer entries") {
  const ModelConfig cfg = toy_config();
  Rng rng(4);
  const auto p = init_params<float>(cfg, rng);
  for (std::size_t c = 0; c < cfg.d; ++c) CHECK(p.embedding(0, c) == 0.0f);
  const auto layout = cfg.mixer_layout();
  const auto pin = pinned_entries(cfg, layout, "blocks.0.mixer.raw_global", cfg.n * cfg.n);
  std::size_t pinned = 0;
  for (auto b : pin) pinned += b;
  CHECK(pinned == cfg.n * (cfg.n - 1) / 2);
  CHECK(pinned_entries(cfg, layout, "head.w", 48).empty());
  // Head bias and every FFN bias start at zero.
  for (float v : p.head_b.values()) CHECK(v == 0.0f);
  const double bound = std::sqrt(6.0 / (cfg.d + 4 * cfg.d));
  for (float v : p.blocks[0].ffn.w1.values()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("initialization is deterministic for a seed") {
  const ModelConfig cfg = toy_config();
  Rng a(11), b(11), c(12);
  const auto pa = init_params<float>(cfg, a);
  const auto pb = init_params<float>(cfg, b);
  const auto pc = init_params<float>(cfg, c);
  CHECK(pa.head_w == pb.head_w);
  CHECK_FALSE(pa.head_w == pc.head_w);
}

TEST_CASE("full-model gradient check in double precision") {
  struct Setup {
    MixerVariant v;
    Combine c;
    std::size_t blocks;
  };
  const Setup setups[] = {{MixerVariant::kFull, Combine::kParallelAdd, 1},
                          {MixerVariant::kFull, Combine::kParallelConcat, 2},
                          {MixerVariant::kFull, Combine::kSerialLG, 1},
                          {MixerVariant::kLocalOnly, Combine::kParallelAdd, 1}};
  for (const Setup& s : setups) {
    CAPTURE(to_string(s.v));
    CAPTURE(to_string(s.c));
    ModelConfig cfg = toy_config(s.v, s.c);
    cfg.blocks = s.blocks;
    Rng rng(21);
    ModelParams<double> p = init_params<double>(cfg, rng);
    std::mt19937_64 r2(22);
    jitter(p, cfg, r2);
    const auto layout = cfg.mixer_layout();
    const auto ids = random_ids(cfg.n, cfg.vocab, 2, r2);
    const auto up = random_tensor(Shape{cfg.n, cfg.vocab}, r2);
    ForwardCache<double> cache;
    (void)forward(p, cfg, layout, ids, {}, &cache);
    ModelParams<double> g = p.zeros_like();
    backward(p, cfg, layout, cache, up, g);
    auto loss = [&] {
      const auto out = forward(p, cfg, layout, ids);
      double total = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) total += out[i] * up[i];
      return total;
    };
    std::vector<GradCheckEntry> entries;
    p.for_each([&](const std::string& name, Tensor<double>& t) { entries.push_back({name, &t, nullptr}); });
    std::size_t k = 0;
    g.for_each([&](const std::string&, Tensor<double>& t) { entries[k++].analytic = &t; });
    const auto report = gradient_check(loss, entries);
    CAPTURE(report.worst_name);
    CHECK(report.max_rel_error < 1e-4);
    CHECK(report.checked == param_count(cfg));
    // Pinned gradients are exactly zero.
    for (double v : std::span(g.embedding.data(), cfg.d)) CHECK(v == 0.0);
  }
}

TEST_CASE("double and float paths agree") {
  const ModelConfig cfg = toy_config();
  Rng rng(31);
  const auto pf = init_params<float>(cfg, rng);
  const auto pd = cast_params<double>(pf);
  std::mt19937_64 r2(32);
  const auto ids = random_ids(cfg.n, cfg.vocab, 1, r2);
  const auto lf = forward(pf, cfg, cfg.mixer_layout(), ids);
  const auto ld = forward(pd, cfg, cfg.mixer_layout(), ids);
  for (std::size_t i = 0; i < lf.size(); ++i) CHECK(std::abs(lf[i] - ld[i]) < 1e-4);
}

}  // TEST_SUITE
