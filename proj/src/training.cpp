// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/training.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>

#include "trimlp/error.hpp"

namespace trimlp {

namespace {

struct MetricName {
  bool ndcg = false;
  std::size_t k = 0;
};

MetricName parse_metric(const std::string& metric) {
  const auto at = metric.find('@');
  const std::string name = metric.substr(0, at);
  MetricName out;
  if (at == std::string::npos || (name != "HR" && name != "NDCG")) {
    throw ConfigError("eval metric '" + metric + "' must be HR@k or NDCG@k");
  }
  out.ndcg = name == "NDCG";
  const std::string digits = metric.substr(at + 1);
  const auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), out.k);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || out.k == 0) {
    throw ConfigError("eval metric '" + metric + "' has no valid cutoff");
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) {
    throw ConfigError("adam_beta1 must lie in (0, 1)");
  }
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam_beta2 must lie in (0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (eval_threads < 1) throw ConfigError("eval_threads must be at least 1");
  parse_metric(eval_metric);
}

template <typename T>
LossResult cross_entropy(const Tensor<T>& logits,
                         std::span<const std::int32_t> targets,
                         Tensor<T>* dlogits, T grad_scale) {
  if (logits.rank() != 2 || logits.dim(0) != targets.size()) {
    throw DimensionError("cross_entropy: logits " + logits.shape().str() +
                         " vs " + std::to_string(targets.size()) + " targets");
  }
  const std::size_t rows = logits.dim(0), v = logits.dim(1);
  if (dlogits != nullptr) *dlogits = Tensor<T>(logits.shape());
  LossResult out;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::int32_t t = targets[i];
    if (t == kIgnoreTarget) continue;
    if (t < 1 || static_cast<std::size_t>(t) > v) {
      throw VocabularyError("target " + std::to_string(t) + " outside [1, " +
                            std::to_string(v) + "]");
    }
    const T* row = logits.data() + i * v;
    const T mx = *std::max_element(row, row + v);
    double sum = 0.0;
    for (std::size_t c = 0; c < v; ++c) sum += std::exp(static_cast<double>(row[c] - mx));
    const double lse = static_cast<double>(mx) + std::log(sum);
    out.loss += lse - static_cast<double>(row[t - 1]);
    ++out.counted;
    if (dlogits != nullptr) {
      T* g = dlogits->data() + i * v;
      for (std::size_t c = 0; c < v; ++c) {
        g[c] = static_cast<T>(std::exp(static_cast<double>(row[c]) - lse)) * grad_scale;
      }
      g[t - 1] -= grad_scale;
    }
  }
  return out;
}

template <typename T>
AdamState<T> make_adam_state(const ModelParams<T>& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

PinnedMasks collect_pinned(const ModelConfig& cfg, const MixerLayout& layout,
                           const ModelParams<float>& params) {
  PinnedMasks out;
  params.for_each([&](const std::string& name, const Tensor<float>& t) {
    out.push_back(pinned_entries(cfg, layout, name, t.size()));
  });
  return out;
}

namespace {

template <typename T>
struct NamedTensors {
  std::vector<std::string> names;
  std::vector<Tensor<T>*> tensors;
};

template <typename T>
NamedTensors<T> gather(ModelParams<T>& p) {
  NamedTensors<T> out;
  p.for_each([&](const std::string& name, Tensor<T>& t) {
    out.names.push_back(name);
    out.tensors.push_back(&t);
  });
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> gather(const ModelParams<T>& p) {
  std::vector<const Tensor<T>*> out;
  p.for_each([&](const std::string&, const Tensor<T>& t) { out.push_back(&t); });
  return out;
}

}  // namespace

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads,
               AdamState<T>& state, const TrainConfig& cfg,
               const PinnedMasks& pinned) {
  NamedTensors<T> p = gather(params);
  const auto g = gather(grads);
  auto m = gather(state.m).tensors;
  auto v = gather(state.v).tensors;
  if (g.size() != p.tensors.size() || m.size() != p.tensors.size()) {
    throw DimensionError("adam_step: gradient/state layout does not match parameters");
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g[k]->shape() != p.tensors[k]->shape()) {
      throw DimensionError("adam_step: gradient for " + p.names[k] + " has shape " +
                           g[k]->shape().str() + ", parameter has " +
                           p.tensors[k]->shape().str());
    }
    const T* gd = g[k]->data();
    for (std::size_t i = 0; i < g[k]->size(); ++i) {
      if (!std::isfinite(gd[i])) {
        throw NumericError("non-finite gradient in " + p.names[k] + " at index " +
                           std::to_string(i));
      }
    }
  }

  ++state.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const std::vector<std::uint8_t>* pin =
        k < pinned.size() && !pinned[k].empty() ? &pinned[k] : nullptr;
    T* w = p.tensors[k]->data();
    T* mk = m[k]->data();
    T* vk = v[k]->data();
    const T* gk = g[k]->data();
    for (std::size_t i = 0; i < g[k]->size(); ++i) {
      if (pin != nullptr && (*pin)[i]) continue;
      const double gi = gk[i];
      const double mi = b1 * mk[i] + (1.0 - b1) * gi;
      const double vi = b2 * vk[i] + (1.0 - b2) * gi * gi;
      mk[i] = static_cast<T>(mi);
      vk[i] = static_cast<T>(vi);
      const double step = cfg.lr * (mi / c1) / (std::sqrt(vi / c2) + cfg.adam_eps);
      w[i] = static_cast<T>(w[i] - step);
    }
  }
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kPatience: return "patience";
    case StopReason::kMaxEpochs: return "max_epochs";
    case StopReason::kDiverged: return "diverged";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                          std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_byte = [&](std::uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  auto mix_u64 = [&](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) mix_byte(static_cast<std::uint8_t>(x >> (8 * i)));
  };
  mix_u64(seed);
  for (char ch : stream) mix_byte(static_cast<std::uint8_t>(ch));
  mix_u64(a);
  mix_u64(b);
  mix_u64(c);
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

double metric_value(const RankingResult& r, const std::string& metric) {
  const MetricName m = parse_metric(metric);
  const auto& table = m.ndcg ? r.ndcg : r.hr;
  const auto it = table.find(m.k);
  if (it == table.end()) {
    throw ConfigError("eval metric '" + metric + "' was not computed");
  }
  return it->second;
}

template <typename T>
double batch_loss(const ModelParams<T>& params, const ModelConfig& cfg,
                  const MixerLayout& layout,
                  std::span<const TrainWindow* const> windows, bool training,
                  std::uint64_t dropout_seed, ModelParams<T>* grads,
                  std::size_t* counted) {
  if (windows.empty()) throw DatasetError("empty training batch");
  const T scale = T(1) / static_cast<T>(windows.size());
  double total = 0.0;
  std::size_t total_counted = 0;
  ForwardCache<T> cache;
  Tensor<T> dlogits;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const TrainWindow& win = *windows[w];
    Rng rng(derive_seed(dropout_seed, "window", w));
    const ForwardOptions opt{training, &rng};
    const Tensor<T> logits =
        forward(params, cfg, layout, std::span<const ItemId>(win.input.ids), opt,
                grads ? &cache : nullptr);
    const LossResult lr = cross_entropy(logits, win.targets,
                                        grads ? &dlogits : nullptr, scale);
    total += lr.loss;
    total_counted += lr.counted;
    if (grads != nullptr && lr.counted > 0) {
      backward(params, cfg, layout, cache, dlogits, *grads);
    }
  }
  if (counted != nullptr) *counted = total_counted;
  return total / static_cast<double>(windows.size());
}

namespace {

std::vector<std::size_t> eval_cutoffs(const std::string& metric) {
  std::vector<std::size_t> ks{5, 10};
  const std::size_t k = parse_metric(metric).k;
  if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
  std::sort(ks.begin(), ks.end());
  return ks;
}

}  // namespace

TrainResult train(const SplitDataset& split, const ModelConfig& mcfg,
                  const TrainConfig& tcfg, const TrainHooks& hooks) {
  mcfg.validate();
  tcfg.validate();
  if (mcfg.vocab != split.vocab) {
    throw ConfigError("model vocab " + std::to_string(mcfg.vocab) +
                      " does not match dataset vocab " + std::to_string(split.vocab));
  }
  if (mcfg.n != split.n) {
    throw ConfigError("model n=" + std::to_string(mcfg.n) +
                      " does not match dataset windows n=" + std::to_string(split.n));
  }
  if (split.train.empty()) throw DatasetError("no training windows");
  if (!hooks.evaluator && split.test.empty()) throw DatasetError("no test cases");

  const MixerLayout layout = mcfg.mixer_layout();
  Rng init_rng(derive_seed(tcfg.seed, "init"));
  ModelParams<float> params = init_params<float>(mcfg, init_rng);
  const PinnedMasks pinned = collect_pinned(mcfg, layout, params);
  AdamState<float> adam = make_adam_state(params);
  ModelParams<float> grads = params.zeros_like();
  Rng shuffle_rng(derive_seed(tcfg.seed, "shuffle"));

  EvalOptions eval_opt;
  eval_opt.ks = eval_cutoffs(tcfg.eval_metric);
  eval_opt.threads = tcfg.eval_threads;

  TrainResult result;
  result.best_params = params;
  result.best_metric = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  result.stop_reason = StopReason::kMaxEpochs;

  for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    const auto batches = epoch_batches(split.train.size(), tcfg.batch, shuffle_rng);
    double loss_sum = 0.0;
    bool diverged = false;
    std::vector<const TrainWindow*> ptrs;
    for (std::size_t b = 0; b < batches.size() && !diverged; ++b) {
      ptrs.clear();
      for (std::size_t idx : batches[b]) ptrs.push_back(&split.train[idx]);
      grads.for_each([](const std::string&, Tensor<float>& t) { t.fill(0.0f); });
      std::size_t counted = 0;
      const double loss =
          batch_loss<float>(params, mcfg, layout, ptrs, true,
                            derive_seed(tcfg.seed, "dropout", epoch, b), &grads,
                            &counted);
      if (counted == 0) ++rec.empty_batches;
      if (!std::isfinite(loss)) {
        diverged = true;
        break;
      }
      try {
        adam_step(params, grads, adam, tcfg, pinned);
      } catch (const NumericError&) {
        diverged = true;
        break;
      }
      loss_sum += loss;
    }
    if (diverged) {
      result.stop_reason = StopReason::kDiverged;
      break;
    }
    rec.loss = loss_sum / static_cast<double>(batches.size());
    rec.metrics = hooks.evaluator ? hooks.evaluator(params, epoch)
                                  : evaluate(params, mcfg, split.test, eval_opt);
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);

    const double metric = metric_value(rec.metrics, tcfg.eval_metric);
    if (metric > result.best_metric) {
      result.best_metric = metric;
      result.best_epoch = epoch;
      result.best_params = params;
      since_best = 0;
    } else if (++since_best >= tcfg.patience) {
      result.stop_reason = StopReason::kPatience;
      break;
    }
  }
  if (result.best_epoch == 0) result.best_metric = 0.0;
  return result;
}

#define TRIMLP_INSTANTIATE(T)                                                   \
  template LossResult cross_entropy(const Tensor<T>&,                           \
                                    std::span<const std::int32_t>, Tensor<T>*,  \
                                    T);                                         \
  template AdamState<T> make_adam_state(const ModelParams<T>&);                 \
  template void adam_step(ModelParams<T>&, const ModelParams<T>&,               \
                          AdamState<T>&, const TrainConfig&,                    \
                          const PinnedMasks&);                                  \
  template double batch_loss(const ModelParams<T>&, const ModelConfig&,         \
                             const MixerLayout&,                                \
                             std::span<const TrainWindow* const>, bool,         \
                             std::uint64_t, ModelParams<T>*, std::size_t*);

TRIMLP_INSTANTIATE(float)
TRIMLP_INSTANTIATE(double)

#undef TRIMLP_INSTANTIATE

}  // namespace trimlp
