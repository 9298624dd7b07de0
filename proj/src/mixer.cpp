// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/mixer.hpp"

namespace trimlp {

std::string_view to_string(MixerVariant v) {
  switch (v) {
    case MixerVariant::kFull: return "full";
    case MixerVariant::kEye: return "eye";
    case MixerVariant::kSquare: return "square";
    case MixerVariant::kGlobalOnly: return "global";
    case MixerVariant::kLocalOnly: return "local";
  }
  return "unknown";
}

std::string_view to_string(Combine c) {
  switch (c) {
    case Combine::kParallelAdd: return "add";
    case Combine::kParallelConcat: return "concat";
    case Combine::kSerialGL: return "serial-gl";
    case Combine::kSerialLG: return "serial-lg";
  }
  return "unknown";
}

std::string_view to_string(SoftmaxAxis a) {
  return a == SoftmaxAxis::kSource ? "source" : "target";
}

std::optional<MixerVariant> parse_variant(std::string_view name) {
  for (auto v : {MixerVariant::kFull, MixerVariant::kEye, MixerVariant::kSquare,
                 MixerVariant::kGlobalOnly, MixerVariant::kLocalOnly}) {
    if (name == to_string(v)) return v;
  }
  return std::nullopt;
}

std::optional<Combine> parse_combine(std::string_view name) {
  for (auto c : {Combine::kParallelAdd, Combine::kParallelConcat,
                 Combine::kSerialGL, Combine::kSerialLG}) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

std::optional<SoftmaxAxis> parse_axis(std::string_view name) {
  if (name == "source") return SoftmaxAxis::kSource;
  if (name == "target") return SoftmaxAxis::kTarget;
  return std::nullopt;
}

BinaryMask build_global_mask(std::size_t n) {
  if (n == 0) throw ConfigError("mask length n must be at least 1");
  BinaryMask mask(n);
  for (std::size_t target = 0; target < n; ++target) {
    for (std::size_t source = 0; source <= target; ++source) {
      mask.set(source, target, true);
    }
  }
  return mask;
}

BinaryMask build_local_mask(std::size_t n, std::size_t sessions) {
  if (n == 0) throw ConfigError("mask length n must be at least 1");
  if (sessions == 0 || n % sessions != 0) {
    throw ConfigError("session count s=" + std::to_string(sessions) +
                      " does not divide sequence length n=" +
                      std::to_string(n));
  }
  const std::size_t len = n / sessions;
  BinaryMask mask(n);
  for (std::size_t target = 0; target < n; ++target) {
    const std::size_t start = (target / len) * len;
    for (std::size_t source = start; source <= target; ++source) {
      mask.set(source, target, true);
    }
  }
  return mask;
}

BinaryMask build_identity_mask(std::size_t n) {
  if (n == 0) throw ConfigError("mask length n must be at least 1");
  BinaryMask mask(n);
  for (std::size_t i = 0; i < n; ++i) mask.set(i, i, true);
  return mask;
}

BinaryMask build_full_mask(std::size_t n) {
  if (n == 0) throw ConfigError("mask length n must be at least 1");
  return BinaryMask(n, true);
}

bool MixerLayout::uses_global() const {
  return variant != MixerVariant::kLocalOnly;
}

bool MixerLayout::uses_local() const {
  return variant == MixerVariant::kFull || variant == MixerVariant::kLocalOnly;
}

bool MixerLayout::uses_merge() const {
  return variant == MixerVariant::kFull && combine == Combine::kParallelConcat;
}

MixerLayout make_mixer_layout(std::size_t n, std::size_t sessions,
                              MixerVariant variant, Combine combine,
                              SoftmaxAxis axis) {
  MixerLayout layout;
  layout.n = n;
  layout.sessions = sessions;
  layout.variant = variant;
  layout.combine = combine;
  layout.axis = axis;
  layout.local_mask = build_local_mask(n, sessions);
  switch (variant) {
    case MixerVariant::kEye:
      layout.global_mask = build_identity_mask(n);
      break;
    case MixerVariant::kSquare:
      layout.global_mask = build_full_mask(n);
      break;
    default:
      layout.global_mask = build_global_mask(n);
      break;
  }
  return layout;
}

namespace {

template <typename T>
Tensor<T> init_raw(const BinaryMask& mask) {
  const std::size_t n = mask.n();
  Tensor<T> raw(Shape{n, n});
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      raw(j, i) = static_cast<T>(mask.active(j, i) ? kActiveInit : kDroppedFill);
    }
  }
  return raw;
}

template <typename T>
void require_tokens(const Tensor<T>& x, std::size_t n, const char* op) {
  if (x.rank() != 2 || x.dim(0) != n) {
    throw DimensionError(std::string(op) + ": input " + x.shape().str() +
                         " does not have " + std::to_string(n) + " tokens");
  }
}

template <typename T>
Tensor<T> concat_columns(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t rows = a.dim(0), da = a.dim(1), db = b.dim(1);
  Tensor<T> out(Shape{rows, da + db});
  for (std::size_t r = 0; r < rows; ++r) {
    auto o = out.row(r);
    auto ra = a.row(r);
    auto rb = b.row(r);
    std::copy(ra.begin(), ra.end(), o.begin());
    std::copy(rb.begin(), rb.end(), o.begin() + static_cast<std::ptrdiff_t>(da));
  }
  return out;
}

}  // namespace

template <typename T>
MixerWeights<T> init_mixer_weights(const MixerLayout& layout) {
  MixerWeights<T> w;
  w.raw_global = init_raw<T>(layout.global_mask);
  w.raw_local = init_raw<T>(layout.local_mask);
  return w;
}

template <typename T>
Tensor<T> mix_branch(const Tensor<T>& x, const Tensor<T>& raw,
                     const BinaryMask& mask, SoftmaxAxis axis,
                     BranchCache<T>* cache) {
  require_tokens(x, mask.n(), "mix_branch");
  Tensor<T> probs = masked_softmax(raw, mask, axis);
  Tensor<T> pre = matmul(transpose(probs), x);
  Tensor<T> out = gelu(pre);
  if (cache != nullptr) {
    cache->input = x;
    cache->probs = std::move(probs);
    cache->pre = std::move(pre);
  }
  return out;
}

template <typename T>
Tensor<T> mix_branch_backward(const Tensor<T>& dout, const BinaryMask& mask,
                              SoftmaxAxis axis, const BranchCache<T>& cache,
                              Tensor<T>& draw) {
  Tensor<T> dpre(dout.shape());
  for (std::size_t i = 0; i < dout.size(); ++i) {
    dpre[i] = dout[i] * gelu_grad(cache.pre[i]);
  }
  // pre = probs^T . x, so dx = probs . dpre and dprobs^T = dpre . x^T.
  Tensor<T> dprobs_t(Shape{mask.n(), mask.n()});
  Tensor<T> dx(cache.input.shape());
  matmul_backward(transpose(cache.probs), cache.input, dpre, &dprobs_t, &dx);
  Tensor<T> dprobs = transpose(dprobs_t);
  Tensor<T> g = masked_softmax_backward(cache.probs, dprobs, mask, axis);
  for (std::size_t i = 0; i < g.size(); ++i) draw[i] += g[i];
  return dx;
}

template <typename T>
Tensor<T> triangular_mix(const Tensor<T>& x, const MixerWeights<T>& w,
                         const MixerLayout& layout, MixCache<T>* cache) {
  require_tokens(x, layout.n, "triangular_mix");
  BranchCache<T>* gc = cache ? &cache->global : nullptr;
  BranchCache<T>* lc = cache ? &cache->local : nullptr;
  auto global = [&](const Tensor<T>& in) {
    return mix_branch(in, w.raw_global, layout.global_mask, layout.axis, gc);
  };
  auto local = [&](const Tensor<T>& in) {
    return mix_branch(in, w.raw_local, layout.local_mask, layout.axis, lc);
  };

  switch (layout.variant) {
    case MixerVariant::kEye:
    case MixerVariant::kSquare:
    case MixerVariant::kGlobalOnly:
      return global(x);
    case MixerVariant::kLocalOnly:
      return local(x);
    case MixerVariant::kFull:
      break;
  }
  switch (layout.combine) {
    case Combine::kParallelAdd: {
      Tensor<T> out = global(x);
      Tensor<T> l = local(x);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += l[i];
      return out;
    }
    case Combine::kParallelConcat: {
      if (w.merge.empty()) {
        throw ConfigError("parallel concat mixer has no merge matrix");
      }
      Tensor<T> joined = concat_columns(global(x), local(x));
      Tensor<T> out = matmul(joined, w.merge);
      if (cache != nullptr) cache->concat = std::move(joined);
      return out;
    }
    case Combine::kSerialGL:
      return local(global(x));
    case Combine::kSerialLG:
      return global(local(x));
  }
  throw ConfigError("unknown mixer combination");
}

template <typename T>
Tensor<T> triangular_mix_backward(const Tensor<T>& dout,
                                  const MixerWeights<T>& w,
                                  const MixerLayout& layout,
                                  const MixCache<T>& cache,
                                  MixerWeights<T>& grads) {
  auto global_back = [&](const Tensor<T>& g) {
    return mix_branch_backward(g, layout.global_mask, layout.axis, cache.global,
                               grads.raw_global);
  };
  auto local_back = [&](const Tensor<T>& g) {
    return mix_branch_backward(g, layout.local_mask, layout.axis, cache.local,
                               grads.raw_local);
  };

  switch (layout.variant) {
    case MixerVariant::kEye:
    case MixerVariant::kSquare:
    case MixerVariant::kGlobalOnly:
      return global_back(dout);
    case MixerVariant::kLocalOnly:
      return local_back(dout);
    case MixerVariant::kFull:
      break;
  }
  switch (layout.combine) {
    case Combine::kParallelAdd: {
      Tensor<T> dx = global_back(dout);
      Tensor<T> dl = local_back(dout);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dl[i];
      return dx;
    }
    case Combine::kParallelConcat: {
      Tensor<T> djoined(cache.concat.shape());
      matmul_backward(cache.concat, w.merge, dout, &djoined, &grads.merge);
      const std::size_t d = dout.dim(1);
      Tensor<T> dg(dout.shape()), dl(dout.shape());
      for (std::size_t r = 0; r < dout.dim(0); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          dg(r, c) = djoined(r, c);
          dl(r, c) = djoined(r, d + c);
        }
      }
      Tensor<T> dx = global_back(dg);
      Tensor<T> dxl = local_back(dl);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dxl[i];
      return dx;
    }
    case Combine::kSerialGL:
      return global_back(local_back(dout));
    case Combine::kSerialLG:
      return local_back(global_back(dout));
  }
  throw ConfigError("unknown mixer combination");
}

#define TRIMLP_INSTANTIATE(T)                                                  \
  template MixerWeights<T> init_mixer_weights(const MixerLayout&);             \
  template Tensor<T> mix_branch(const Tensor<T>&, const Tensor<T>&,            \
                                const BinaryMask&, SoftmaxAxis,                \
                                BranchCache<T>*);                              \
  template Tensor<T> mix_branch_backward(const Tensor<T>&, const BinaryMask&,  \
                                         SoftmaxAxis, const BranchCache<T>&,   \
                                         Tensor<T>&);                          \
  template Tensor<T> triangular_mix(const Tensor<T>&, const MixerWeights<T>&,  \
                                    const MixerLayout&, MixCache<T>*);         \
  template Tensor<T> triangular_mix_backward(                                  \
      const Tensor<T>&, const MixerWeights<T>&, const MixerLayout&,            \
      const MixCache<T>&, MixerWeights<T>&);

TRIMLP_INSTANTIATE(float)
TRIMLP_INSTANTIATE(double)

#undef TRIMLP_INSTANTIATE

}  // namespace trimlp
