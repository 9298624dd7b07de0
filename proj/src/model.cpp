// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trimlp {

void ModelConfig::validate() const {
  if (n < 1) throw ConfigError("n must be at least 1");
  if (d < 1) throw ConfigError("d must be at least 1");
  if (blocks < 1) throw ConfigError("blocks must be at least 1");
  if (vocab < 1) throw ConfigError("vocab must be at least 1");
  if (sessions < 1 || n % sessions != 0) {
    throw ConfigError("session count s=" + std::to_string(sessions) +
                      " does not divide sequence length n=" +
                      std::to_string(n));
  }
  validate_dropout_rate(dropout);
  if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be > 0");
}

MixerLayout ModelConfig::mixer_layout() const {
  validate();
  return make_mixer_layout(n, sessions, variant, combine, axis);
}

TokenWindow TokenWindow::from_items(std::span<const ItemId> items,
                                    std::size_t n, bool reserved_tail) {
  const std::size_t capacity = reserved_tail ? n - 1 : n;
  if (n < (reserved_tail ? 2u : 1u) || items.size() > capacity) {
    throw ConfigError("window of length " + std::to_string(n) +
                      " cannot hold " + std::to_string(items.size()) +
                      " items");
  }
  TokenWindow w;
  w.reserved_tail = reserved_tail;
  w.pad_len = capacity - items.size();
  w.ids.assign(n, kPadItem);
  std::copy(items.begin(), items.end(),
            w.ids.begin() + static_cast<std::ptrdiff_t>(w.pad_len));
  return w;
}

std::size_t TokenWindow::query_row() const {
  return reserved_tail ? ids.size() - 2 : ids.size() - 1;
}

void TokenWindow::validate(std::size_t n, std::size_t vocab) const {
  if (ids.size() != n) {
    throw ConfigError("window length " + std::to_string(ids.size()) +
                      " does not match model length n=" + std::to_string(n));
  }
  const std::size_t end = reserved_tail ? n - 1 : n;
  if (pad_len > end) throw ConfigError("window pad_len exceeds its length");
  for (std::size_t i = 0; i < n; ++i) {
    const ItemId id = ids[i];
    const bool should_pad = i < pad_len || i >= end;
    if (should_pad && id != kPadItem) {
      throw ConfigError("window position " + std::to_string(i) +
                        " should hold the pad token");
    }
    if (!should_pad && (id < 1 || static_cast<std::size_t>(id) > vocab)) {
      throw VocabularyError("item id " + std::to_string(id) +
                            " outside vocabulary [1, " + std::to_string(vocab) +
                            "]");
    }
  }
}

template <typename T>
void ModelParams<T>::for_each(
    const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  fn("embedding", embedding);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string pre = "blocks." + std::to_string(b) + ".";
    BlockParams<T>& blk = blocks[b];
    fn(pre + "norm1.alpha", blk.norm1.alpha);
    fn(pre + "norm1.beta", blk.norm1.beta);
    fn(pre + "mixer.raw_global", blk.mixer.raw_global);
    fn(pre + "mixer.raw_local", blk.mixer.raw_local);
    if (!blk.mixer.merge.empty()) fn(pre + "mixer.merge", blk.mixer.merge);
    fn(pre + "norm2.alpha", blk.norm2.alpha);
    fn(pre + "norm2.beta", blk.norm2.beta);
    fn(pre + "ffn.w1", blk.ffn.w1);
    fn(pre + "ffn.b1", blk.ffn.b1);
    fn(pre + "ffn.w2", blk.ffn.w2);
    fn(pre + "ffn.b2", blk.ffn.b2);
  }
  fn("head.w", head_w);
  fn("head.b", head_b);
}

template <typename T>
void ModelParams<T>::for_each(
    const std::function<void(const std::string&, const Tensor<T>&)>& fn) const {
  const_cast<ModelParams<T>*>(this)->for_each(
      [&](const std::string& name, Tensor<T>& t) { fn(name, t); });
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros_like() const {
  ModelParams<T> out = *this;
  out.for_each([](const std::string&, Tensor<T>& t) { t.fill(T(0)); });
  return out;
}

template <typename T>
std::size_t ModelParams<T>::census() const {
  std::size_t total = 0;
  for_each([&](const std::string&, const Tensor<T>& t) { total += t.size(); });
  return total;
}

std::vector<std::uint8_t> pinned_entries(const ModelConfig& cfg,
                                         const MixerLayout& layout,
                                         const std::string& name,
                                         std::size_t size) {
  std::vector<std::uint8_t> pinned;
  auto from_mask = [&](const BinaryMask& mask) {
    pinned.resize(size);
    for (std::size_t i = 0; i < size; ++i) pinned[i] = mask.bits()[i] ? 0 : 1;
  };
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (name == "embedding") {
    pinned.assign(size, 0);
    std::fill(pinned.begin(), pinned.begin() + static_cast<std::ptrdiff_t>(cfg.d), 1);
  } else if (ends_with("mixer.raw_global")) {
    from_mask(layout.global_mask);
  } else if (ends_with("mixer.raw_local")) {
    from_mask(layout.local_mask);
  }
  return pinned;
}

namespace {

template <typename T>
Tensor<T> xavier(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor<T> w(Shape{fan_in, fan_out});
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
  }
  return w;
}

template <typename T>
LayerNormParams<T> unit_norm(std::size_t d) {
  return {Tensor<T>(Shape{d}, T(1)), Tensor<T>(Shape{d}, T(0))};
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, Rng& rng) {
  const MixerLayout layout = cfg.mixer_layout();
  const std::size_t d = cfg.d, hidden = 4 * cfg.d;
  ModelParams<T> p;
  p.embedding = xavier<T>(cfg.vocab + 1, d, rng);
  std::fill_n(p.embedding.data(), d, T(0));
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    BlockParams<T> blk;
    blk.norm1 = unit_norm<T>(d);
    blk.mixer = init_mixer_weights<T>(layout);
    if (layout.uses_merge()) blk.mixer.merge = xavier<T>(2 * d, d, rng);
    blk.norm2 = unit_norm<T>(d);
    blk.ffn.w1 = xavier<T>(d, hidden, rng);
    blk.ffn.b1 = Tensor<T>(Shape{hidden});
    blk.ffn.w2 = xavier<T>(hidden, d, rng);
    blk.ffn.b2 = Tensor<T>(Shape{d});
    p.blocks.push_back(std::move(blk));
  }
  p.head_w = xavier<T>(d, cfg.vocab, rng);
  p.head_b = Tensor<T>(Shape{cfg.vocab});
  return p;
}

template <typename T, typename U>
ModelParams<T> cast_params(const ModelParams<U>& src) {
  auto conv = [](const Tensor<U>& t) {
    if (t.empty()) return Tensor<T>();
    std::vector<T> v(t.values().begin(), t.values().end());
    return Tensor<T>(t.shape(), std::move(v));
  };
  ModelParams<T> out;
  out.embedding = conv(src.embedding);
  for (const BlockParams<U>& b : src.blocks) {
    BlockParams<T> nb;
    nb.norm1 = {conv(b.norm1.alpha), conv(b.norm1.beta)};
    nb.mixer = {conv(b.mixer.raw_global), conv(b.mixer.raw_local),
                conv(b.mixer.merge)};
    nb.norm2 = {conv(b.norm2.alpha), conv(b.norm2.beta)};
    nb.ffn = {conv(b.ffn.w1), conv(b.ffn.b1), conv(b.ffn.w2), conv(b.ffn.b2)};
    out.blocks.push_back(std::move(nb));
  }
  out.head_w = conv(src.head_w);
  out.head_b = conv(src.head_b);
  return out;
}

std::size_t param_count(const ModelConfig& cfg) {
  const std::size_t n = cfg.n, d = cfg.d, v = cfg.vocab;
  std::size_t block = 2 * n * n + (d * 4 * d + 4 * d) + (4 * d * d + d) + 2 * 2 * d;
  if (cfg.variant == MixerVariant::kFull &&
      cfg.combine == Combine::kParallelConcat) {
    block += 2 * d * d;
  }
  return (v + 1) * d + cfg.blocks * block + d * v + v;
}

template <typename T>
Tensor<T> encode(const ModelParams<T>& p, const ModelConfig& cfg,
                 const MixerLayout& layout, std::span<const ItemId> ids,
                 const ForwardOptions& opt, ForwardCache<T>* cache) {
  if (ids.size() != cfg.n) {
    throw ConfigError("input window has " + std::to_string(ids.size()) +
                      " ids, model expects n=" + std::to_string(cfg.n));
  }
  if (p.embedding.dim(0) != cfg.vocab + 1 || p.blocks.size() != cfg.blocks) {
    throw ConfigError("parameters do not match the model configuration");
  }
  const T eps = static_cast<T>(cfg.layer_norm_eps);
  const DropoutContext drop{cfg.dropout, opt.training, opt.rng};

  std::vector<T> embed_scale;
  Tensor<T> x = dropout(embed(ids, p.embedding), cfg.dropout, opt.training,
                        opt.rng, &embed_scale);
  if (cache != nullptr) {
    cache->ids.assign(ids.begin(), ids.end());
    cache->embed_dropout = std::move(embed_scale);
    cache->blocks.assign(cfg.blocks, BlockCache<T>{});
  }
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const BlockParams<T>& blk = p.blocks[b];
    BlockCache<T>* bc = cache ? &cache->blocks[b] : nullptr;
    Tensor<T> y = triangular_mix(
        layer_norm(x, blk.norm1, eps, bc ? &bc->norm1 : nullptr), blk.mixer,
        layout, bc ? &bc->mix : nullptr);
    add_into(y, x);
    x = ffn(layer_norm(y, blk.norm2, eps, bc ? &bc->norm2 : nullptr), blk.ffn,
            drop, bc ? &bc->ffn : nullptr);
    add_into(x, y);
  }
  if (cache != nullptr) cache->encoded = x;
  return x;
}

template <typename T>
Tensor<T> forward(const ModelParams<T>& p, const ModelConfig& cfg,
                  const MixerLayout& layout, std::span<const ItemId> ids,
                  const ForwardOptions& opt, ForwardCache<T>* cache) {
  Tensor<T> logits = matmul(encode(p, cfg, layout, ids, opt, cache), p.head_w);
  add_row_bias(logits, p.head_b);
  return logits;
}

template <typename T>
void backward(const ModelParams<T>& p, const ModelConfig& cfg,
              const MixerLayout& layout, const ForwardCache<T>& cache,
              const Tensor<T>& dlogits, ModelParams<T>& grads) {
  add_column_sums(dlogits, grads.head_b);
  Tensor<T> dx(cache.encoded.shape());
  matmul_backward(cache.encoded, p.head_w, dlogits, &dx, &grads.head_w);

  for (std::size_t b = cfg.blocks; b-- > 0;) {
    const BlockParams<T>& blk = p.blocks[b];
    const BlockCache<T>& bc = cache.blocks[b];
    BlockParams<T>& g = grads.blocks[b];
    // dx currently holds dZ; Z = Y + FFN(LN(Y)).
    Tensor<T> dy = layer_norm_backward(ffn_backward(dx, blk.ffn, bc.ffn, g.ffn),
                                       blk.norm2, bc.norm2, g.norm2);
    add_into(dy, dx);
    // Y = X + Mix(LN(X)).
    dx = layer_norm_backward(
        triangular_mix_backward(dy, blk.mixer, layout, bc.mix, g.mixer),
        blk.norm1, bc.norm1, g.norm1);
    add_into(dx, dy);
  }
  if (!cache.embed_dropout.empty()) {
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= cache.embed_dropout[i];
  }
  embed_backward(std::span<const ItemId>(cache.ids), dx, grads.embedding);
}

template <typename T>
std::vector<T> score_row(const ModelParams<T>& p, const ModelConfig& cfg,
                         const MixerLayout& layout, const TokenWindow& window,
                         std::size_t row) {
  const Tensor<T> z = encode(p, cfg, layout, std::span<const ItemId>(window.ids));
  const std::size_t d = cfg.d, v = cfg.vocab;
  std::vector<T> out(p.head_b.values().begin(), p.head_b.values().end());
  auto zr = z.row(row);
  for (std::size_t k = 0; k < d; ++k) {
    const T zk = zr[k];
    const T* w = p.head_w.data() + k * v;
    for (std::size_t c = 0; c < v; ++c) out[c] += zk * w[c];
  }
  return out;
}

std::vector<ItemId> topk_from_logits(std::span<const float> logits,
                                     std::size_t k) {
  if (k > logits.size()) {
    throw ConfigError("K=" + std::to_string(k) + " exceeds the " +
                      std::to_string(logits.size()) + " candidate items");
  }
  std::vector<ItemId> order(logits.size());
  std::iota(order.begin(), order.end(), 1);
  auto better = [&](ItemId a, ItemId b) {
    const float la = logits[static_cast<std::size_t>(a - 1)];
    const float lb = logits[static_cast<std::size_t>(b - 1)];
    return la != lb ? la > lb : a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), better);
  order.resize(k);
  return order;
}

std::vector<ItemId> predict_topk(const ModelParams<float>& p,
                                 const ModelConfig& cfg,
                                 const MixerLayout& layout,
                                 const TokenWindow& window, std::size_t k) {
  if (k > cfg.vocab) {
    throw ConfigError("K=" + std::to_string(k) + " exceeds vocabulary size " +
                      std::to_string(cfg.vocab));
  }
  window.validate(cfg.n, cfg.vocab);
  const std::vector<float> row =
      score_row(p, cfg, layout, window, window.query_row());
  return topk_from_logits(row, k);
}

#define TRIMLP_INSTANTIATE(T)                                                  \
  template struct ModelParams<T>;                                              \
  template ModelParams<T> init_params(const ModelConfig&, Rng&);               \
  template Tensor<T> encode(const ModelParams<T>&, const ModelConfig&,         \
                            const MixerLayout&, std::span<const ItemId>,       \
                            const ForwardOptions&, ForwardCache<T>*);          \
  template Tensor<T> forward(const ModelParams<T>&, const ModelConfig&,        \
                             const MixerLayout&, std::span<const ItemId>,      \
                             const ForwardOptions&, ForwardCache<T>*);         \
  template void backward(const ModelParams<T>&, const ModelConfig&,            \
                         const MixerLayout&, const ForwardCache<T>&,           \
                         const Tensor<T>&, ModelParams<T>&);                   \
  template std::vector<T> score_row(const ModelParams<T>&, const ModelConfig&, \
                                    const MixerLayout&, const TokenWindow&,    \
                                    std::size_t);

TRIMLP_INSTANTIATE(float)
TRIMLP_INSTANTIATE(double)

#undef TRIMLP_INSTANTIATE

template ModelParams<double> cast_params<double, float>(const ModelParams<float>&);
template ModelParams<float> cast_params<float, double>(const ModelParams<double>&);

}  // namespace trimlp
