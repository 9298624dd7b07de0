// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/layers.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace trimlp {

namespace {

template <typename T>
void require_width(const Tensor<T>& x, std::size_t d, const char* op) {
  if (x.rank() != 2 || x.dim(1) != d) {
    throw DimensionError(std::string(op) + ": input " + x.shape().str() +
                         " does not have last axis " + std::to_string(d));
  }
}

}  // namespace

template <typename T>
Tensor<T> embed(std::span<const ItemId> ids, const Tensor<T>& table) {
  if (table.rank() != 2) {
    throw DimensionError("embed: table must be rank 2, got " +
                         table.shape().str());
  }
  const std::size_t d = table.dim(1);
  const auto vocab = static_cast<ItemId>(table.dim(0) - 1);
  Tensor<T> out(Shape{ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const ItemId id = ids[i];
    if (id < 0 || id > vocab) {
      throw VocabularyError("embed: item id " + std::to_string(id) +
                            " outside [0, " + std::to_string(vocab) + "]");
    }
    if (id == kPadItem) continue;
    auto src = table.row(static_cast<std::size_t>(id));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

template <typename T>
void embed_backward(std::span<const ItemId> ids, const Tensor<T>& dout,
                    Tensor<T>& dtable) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == kPadItem) continue;
    auto dst = dtable.row(static_cast<std::size_t>(ids[i]));
    auto src = dout.row(i);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
  }
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const LayerNormParams<T>& p, T eps,
                     LayerNormCache<T>* cache) {
  const std::size_t d = p.alpha.size();
  require_width(x, d, "layer_norm");
  const std::size_t rows = x.dim(0);
  Tensor<T> out(x.shape());
  if (cache != nullptr) {
    cache->normalized = Tensor<T>(x.shape());
    cache->inv_std.assign(rows, T(0));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = x.row(r);
    T mean = 0;
    for (T v : in) mean += v;
    mean /= static_cast<T>(d);
    T var = 0;
    for (T v : in) var += (v - mean) * (v - mean);
    var /= static_cast<T>(d);
    const T inv_std = T(1) / std::sqrt(var + eps);
    auto o = out.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const T xhat = (in[c] - mean) * inv_std;
      if (cache != nullptr) cache->normalized(r, c) = xhat;
      o[c] = p.alpha[c] * xhat + p.beta[c];
    }
    if (cache != nullptr) cache->inv_std[r] = inv_std;
  }
  return out;
}

template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& dout, const LayerNormParams<T>& p,
                              const LayerNormCache<T>& cache,
                              LayerNormParams<T>& grads) {
  const std::size_t rows = dout.dim(0);
  const std::size_t d = dout.dim(1);
  Tensor<T> dx(dout.shape());
  std::vector<T> dxhat(d);
  for (std::size_t r = 0; r < rows; ++r) {
    auto g = dout.row(r);
    auto xhat = cache.normalized.row(r);
    T sum_dxhat = 0;
    T sum_dxhat_xhat = 0;
    for (std::size_t c = 0; c < d; ++c) {
      grads.alpha[c] += g[c] * xhat[c];
      grads.beta[c] += g[c];
      dxhat[c] = g[c] * p.alpha[c];
      sum_dxhat += dxhat[c];
      sum_dxhat_xhat += dxhat[c] * xhat[c];
    }
    const T inv_d = T(1) / static_cast<T>(d);
    auto o = dx.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      o[c] = cache.inv_std[r] *
             (dxhat[c] - inv_d * sum_dxhat - xhat[c] * inv_d * sum_dxhat_xhat);
    }
  }
  return dx;
}

template <typename T>
constexpr T kInvSqrt2 = T(1) / std::numbers::sqrt2_v<T>;

template <typename T>
T gelu(T x) {
  return x * T(0.5) * (T(1) + std::erf(x * kInvSqrt2<T>));
}

template <typename T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * kInvSqrt2<T>));
  const T pdf = std::exp(T(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<T> *
                kInvSqrt2<T>;
  return cdf + x * pdf;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gelu(x[i]);
  return out;
}

void validate_dropout_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " +
                      std::to_string(rate));
  }
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng* rng,
                  std::vector<T>* scale) {
  validate_dropout_rate(rate);
  if (scale != nullptr) scale->clear();
  if (!training || rate == 0.0) return x;
  if (rng == nullptr) throw ConfigError("dropout: training mode needs an rng");
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> out(x.shape());
  if (scale != nullptr) scale->resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T s = uniform01(*rng) < rate ? T(0) : keep_scale;
    out[i] = x[i] * s;
    if (scale != nullptr) (*scale)[i] = s;
  }
  return out;
}

template <typename T>
void add_row_bias(Tensor<T>& x, const Tensor<T>& bias) {
  for (std::size_t r = 0; r < x.dim(0); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

template <typename T>
void add_column_sums(const Tensor<T>& dout, Tensor<T>& dbias) {
  for (std::size_t r = 0; r < dout.dim(0); ++r) {
    auto row = dout.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) dbias[c] += row[c];
  }
}

template <typename T>
Tensor<T> ffn(const Tensor<T>& y, const FfnParams<T>& p,
              const DropoutContext& drop, FfnCache<T>* cache) {
  require_width(y, p.w1.dim(0), "ffn");
  Tensor<T> pre = matmul(y, p.w1);
  add_row_bias(pre, p.b1);
  std::vector<T> scale;
  Tensor<T> hidden =
      dropout(gelu(pre), drop.rate, drop.training, drop.rng, &scale);
  Tensor<T> out = matmul(hidden, p.w2);
  add_row_bias(out, p.b2);
  if (cache != nullptr) {
    cache->input = y;
    cache->pre = std::move(pre);
    cache->hidden = std::move(hidden);
    cache->dropout_scale = std::move(scale);
  }
  return out;
}

template <typename T>
Tensor<T> ffn_backward(const Tensor<T>& dout, const FfnParams<T>& p,
                       const FfnCache<T>& cache, FfnParams<T>& grads) {
  add_column_sums(dout, grads.b2);
  Tensor<T> dhidden(cache.hidden.shape());
  matmul_backward(cache.hidden, p.w2, dout, &dhidden, &grads.w2);
  Tensor<T>& dpre = dhidden;
  for (std::size_t i = 0; i < dpre.size(); ++i) {
    T g = dpre[i];
    if (!cache.dropout_scale.empty()) g *= cache.dropout_scale[i];
    dpre[i] = g * gelu_grad(cache.pre[i]);
  }
  add_column_sums(dpre, grads.b1);
  Tensor<T> dy(cache.input.shape());
  matmul_backward(cache.input, p.w1, dpre, &dy, &grads.w1);
  return dy;
}

#define TRIMLP_INSTANTIATE(T)                                                  \
  template Tensor<T> embed(std::span<const ItemId>, const Tensor<T>&);         \
  template void embed_backward(std::span<const ItemId>, const Tensor<T>&,      \
                               Tensor<T>&);                                    \
  template Tensor<T> layer_norm(const Tensor<T>&, const LayerNormParams<T>&,   \
                                T, LayerNormCache<T>*);                        \
  template Tensor<T> layer_norm_backward(const Tensor<T>&,                     \
                                         const LayerNormParams<T>&,            \
                                         const LayerNormCache<T>&,             \
                                         LayerNormParams<T>&);                 \
  template T gelu(T);                                                          \
  template T gelu_grad(T);                                                     \
  template Tensor<T> gelu(const Tensor<T>&);                                   \
  template Tensor<T> dropout(const Tensor<T>&, double, bool, Rng*,             \
                             std::vector<T>*);                                 \
  template void add_row_bias(Tensor<T>&, const Tensor<T>&);                    \
  template void add_column_sums(const Tensor<T>&, Tensor<T>&);                 \
  template Tensor<T> ffn(const Tensor<T>&, const FfnParams<T>&,                \
                         const DropoutContext&, FfnCache<T>*);                 \
  template Tensor<T> ffn_backward(const Tensor<T>&, const FfnParams<T>&,       \
                                  const FfnCache<T>&, FfnParams<T>&);

TRIMLP_INSTANTIATE(float)
TRIMLP_INSTANTIATE(double)

#undef TRIMLP_INSTANTIATE

}  // namespace trimlp
