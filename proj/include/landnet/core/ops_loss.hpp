#ifndef LANDNET_CORE_OPS_LOSS_HPP
#define LANDNET_CORE_OPS_LOSS_HPP

#include <array>
#include <cmath>
#include <vector>

#include "landnet/core/ops.hpp"

namespace landnet::ops {

/// View of channels [c0, c0+len) as a new tensor (copy semantics).
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int len) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  check_shape(c0 >= 0 && c0 + len <= c, "slice_channels: out of range");
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  Tensor<T> out =
      Tensor<T>::make({n, len, h, w}, {x}, [c0, len, c, hw](Node<T>& o) {
        auto& px = *o.parents[0];
        if (!px.requires_grad) return;
        px.ensure_grad();
        const int nn = o.shape[0];
        for (int b = 0; b < nn; ++b) {
          const T* src = o.g.data() + static_cast<std::int64_t>(b) * len * hw;
          T* dst = px.g.data() + (static_cast<std::int64_t>(b) * c + c0) * hw;
          for (std::int64_t i = 0; i < len * hw; ++i) dst[i] += src[i];
        }
      });
  for (int b = 0; b < n; ++b) {
    const T* src = x.data() + (static_cast<std::int64_t>(b) * c + c0) * hw;
    T* dst = out.data() + static_cast<std::int64_t>(b) * len * hw;
    std::copy(src, src + len * hw, dst);
  }
  return out;
}

/// Stack K vectors of length C into a [K,C] matrix.
template <typename T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows) {
  check_shape(!rows.empty(), "stack_rows: empty input");
  const int c = static_cast<int>(rows[0].numel());
  for (const auto& r : rows)
    check_shape(r.ndim() == 1 && r.numel() == c,
                "stack_rows: rows must be equal-length vectors");
  const int k = static_cast<int>(rows.size());
  Tensor<T> out = Tensor<T>::make({k, c}, rows, [c](Node<T>& o) {
    for (size_t i = 0; i < o.parents.size(); ++i) {
      auto& p = *o.parents[i];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (int j = 0; j < c; ++j) p.g[j] += o.g[i * c + j];
    }
  });
  for (int i = 0; i < k; ++i)
    std::copy(rows[i].data(), rows[i].data() + c, out.data() + i * c);
  return out;
}

/// Class-prompt alignment logits: scale * <P_k, F(:,x)> for every spatial
/// position. F[N,C,S,S], P[K,C] -> [N,K,S,S].
template <typename T>
Tensor<T> prompt_logits(const Tensor<T>& f, const Tensor<T>& p, T scale) {
  check_shape(f.ndim() == 4 && p.ndim() == 2 && f.dim(1) == p.dim(1),
              "prompt_logits: channel mismatch between features and prompts");
  const int n = f.dim(0), c = f.dim(1), h = f.dim(2), w = f.dim(3);
  const int k = p.dim(0);
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  Tensor<T> out = Tensor<T>::make(
      {n, k, h, w}, {f, p}, [n, c, k, hw, scale](Node<T>& o) {
        auto& pf = *o.parents[0];
        auto& pp = *o.parents[1];
        if (pf.requires_grad) pf.ensure_grad();
        if (pp.requires_grad) pp.ensure_grad();
        for (int b = 0; b < n; ++b) {
          const T* gy = o.g.data() + static_cast<std::int64_t>(b) * k * hw;
          const T* fv = pf.v.data() + static_cast<std::int64_t>(b) * c * hw;
          if (pp.requires_grad) {
            // dP += scale * dY * F^T   ([K,hw] x [hw,C])
            gemm(false, true, k, c, static_cast<int>(hw), scale, gy,
                 static_cast<int>(hw), fv, static_cast<int>(hw), T(1),
                 pp.g.data(), c);
          }
          if (pf.requires_grad) {
            // dF += scale * P^T * dY   ([C,K] x [K,hw])
            gemm(true, false, c, static_cast<int>(hw), k, scale, pp.v.data(),
                 c, gy, static_cast<int>(hw), T(1),
                 pf.g.data() + static_cast<std::int64_t>(b) * c * hw,
                 static_cast<int>(hw));
          }
        }
      });
  for (int b = 0; b < n; ++b) {
    gemm(false, false, k, static_cast<int>(hw), c, scale, p.data(), c,
         f.data() + static_cast<std::int64_t>(b) * c * hw,
         static_cast<int>(hw), T(0),
         out.data() + static_cast<std::int64_t>(b) * k * hw,
         static_cast<int>(hw));
  }
  return out;
}

/// Masked average pooling: F[N,C,S,S], mask[N,K,S,S] (constant weights) ->
/// R[N,K,C] with R[n,k] = sum_x m*F / (sum_x m + eps).
template <typename T>
Tensor<T> masked_avgpool(const Tensor<T>& f, const std::vector<T>& mask,
                         int k, T eps) {
  const int n = f.dim(0), c = f.dim(1), h = f.dim(2), w = f.dim(3);
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  check_shape(static_cast<std::int64_t>(mask.size()) ==
                  static_cast<std::int64_t>(n) * k * hw,
              "masked_avgpool: mask size mismatch");
  auto m = std::make_shared<std::vector<T>>(mask);
  auto inv_den = std::make_shared<std::vector<T>>(static_cast<size_t>(n) * k);
  for (int b = 0; b < n; ++b) {
    for (int kk = 0; kk < k; ++kk) {
      const T* mv = m->data() + (static_cast<std::int64_t>(b) * k + kk) * hw;
      T acc = T(0);
      for (std::int64_t i = 0; i < hw; ++i) acc += mv[i];
      (*inv_den)[b * k + kk] = T(1) / (acc + eps);
    }
  }
  Tensor<T> out = Tensor<T>::make(
      {n, k, c}, {f}, [m, inv_den, n, c, k, hw](Node<T>& o) {
        auto& pf = *o.parents[0];
        if (!pf.requires_grad) return;
        pf.ensure_grad();
        std::vector<T> scaled(static_cast<size_t>(k) * c);
        for (int b = 0; b < n; ++b) {
          const T* gr = o.g.data() + static_cast<std::int64_t>(b) * k * c;
          for (int kk = 0; kk < k; ++kk) {
            const T s = (*inv_den)[b * k + kk];
            for (int cc = 0; cc < c; ++cc)
              scaled[kk * c + cc] = gr[kk * c + cc] * s;
          }
          // dF += scaled^T [C,K] * M [K,hw]
          gemm(true, false, c, static_cast<int>(hw), k, T(1), scaled.data(),
               c, m->data() + static_cast<std::int64_t>(b) * k * hw,
               static_cast<int>(hw), T(1),
               pf.g.data() + static_cast<std::int64_t>(b) * c * hw,
               static_cast<int>(hw));
        }
      });
  for (int b = 0; b < n; ++b) {
    // R = M [K,hw] * F^T [hw,C], rows scaled by 1/(den+eps)
    gemm(false, true, k, c, static_cast<int>(hw), T(1),
         m->data() + static_cast<std::int64_t>(b) * k * hw,
         static_cast<int>(hw),
         f.data() + static_cast<std::int64_t>(b) * c * hw,
         static_cast<int>(hw), T(0),
         out.data() + static_cast<std::int64_t>(b) * k * c, c);
    for (int kk = 0; kk < k; ++kk) {
      const T s = (*inv_den)[b * k + kk];
      T* row = out.data() + (static_cast<std::int64_t>(b) * k + kk) * c;
      for (int cc = 0; cc < c; ++cc) row[cc] *= s;
    }
  }
  return out;
}

/// Per-channel mean binary cross-entropy with logits, numerically stable
/// softplus form. logits[N,C,H,W], targets constant -> [N,C].
template <typename T>
Tensor<T> bce_with_logits_per_channel(const Tensor<T>& logits,
                                      const std::vector<T>& targets) {
  const int n = logits.dim(0), c = logits.dim(1);
  const std::int64_t hw = detail::spatial(logits.shape());
  check_shape(static_cast<std::int64_t>(targets.size()) == logits.numel(),
              "bce_with_logits: target size mismatch");
  auto tgt = std::make_shared<std::vector<T>>(targets);
  Tensor<T> out = Tensor<T>::make({n, c}, {logits}, [tgt, hw](Node<T>& o) {
    auto& pz = *o.parents[0];
    if (!pz.requires_grad) return;
    pz.ensure_grad();
    const T inv = T(1) / static_cast<T>(hw);
    const std::int64_t nc = o.numel();
    for (std::int64_t i = 0; i < nc; ++i) {
      const T gy = o.g[i] * inv;
      const std::int64_t base = i * hw;
      for (std::int64_t j = 0; j < hw; ++j) {
        const T z = pz.v[base + j];
        const T sig = T(1) / (T(1) + std::exp(-z));
        pz.g[base + j] += gy * (sig - (*tgt)[base + j]);
      }
    }
  });
  const std::int64_t nc = static_cast<std::int64_t>(n) * c;
  for (std::int64_t i = 0; i < nc; ++i) {
    const std::int64_t base = i * hw;
    T acc = T(0);
    for (std::int64_t j = 0; j < hw; ++j) {
      const T z = logits.data()[base + j];
      const T t = targets[base + j];
      // max(z,0) - z*t + log(1 + exp(-|z|))
      acc += std::max(z, T(0)) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
    out.data()[i] = acc / static_cast<T>(hw);
  }
  return out;
}

/// Temperature-scaled prompt contrastive loss (negated log-softmax over the
/// valid classes). P[K,C] prompts, R[K,C] reference embeddings, sim = cosine
/// by default or raw dot product when `cosine` is false. Classes with
/// valid[k]==false are excluded from both numerator and partition.
/// Returns 0 (and sets *skipped) when no class is valid.
template <typename T>
Tensor<T> contrastive_prompt_loss(const Tensor<T>& p, const Tensor<T>& r,
                                  const std::vector<bool>& valid, T tau,
                                  bool cosine = true,
                                  bool* skipped = nullptr) {
  if (tau <= T(0)) throw ConfigError("contrastive loss: tau must be > 0");
  check_shape(p.ndim() == 2 && r.ndim() == 2 && p.shape() == r.shape(),
              "contrastive loss: P and R must both be [K,C]");
  const int k = p.dim(0), c = p.dim(1);
  check_shape(static_cast<int>(valid.size()) == k,
              "contrastive loss: valid flag count mismatch");
  std::vector<int> vidx;
  for (int i = 0; i < k; ++i)
    if (valid[i]) vidx.push_back(i);
  const int nv = static_cast<int>(vidx.size());
  if (skipped) *skipped = (nv == 0);
  if (nv == 0) return Tensor<T>::scalar(T(0));

  // Normalized rows (or raw copies in dot mode) and pairwise similarities.
  auto un = std::make_shared<std::vector<T>>(static_cast<size_t>(k) * c);
  auto vn = std::make_shared<std::vector<T>>(static_cast<size_t>(k) * c);
  auto pnorm = std::make_shared<std::vector<T>>(k, T(1));
  auto rnorm = std::make_shared<std::vector<T>>(k, T(1));
  constexpr T kTiny = T(1e-12);
  for (int i = 0; i < k; ++i) {
    T np = T(0), nr = T(0);
    for (int j = 0; j < c; ++j) {
      np += p.data()[i * c + j] * p.data()[i * c + j];
      nr += r.data()[i * c + j] * r.data()[i * c + j];
    }
    np = std::max(std::sqrt(np), kTiny);
    nr = std::max(std::sqrt(nr), kTiny);
    (*pnorm)[i] = cosine ? np : T(1);
    (*rnorm)[i] = cosine ? nr : T(1);
    for (int j = 0; j < c; ++j) {
      (*un)[i * c + j] = p.data()[i * c + j] / (*pnorm)[i];
      (*vn)[i * c + j] = r.data()[i * c + j] / (*rnorm)[i];
    }
  }
  auto sim = std::make_shared<std::vector<T>>(static_cast<size_t>(k) * k,
                                              T(0));
  for (int a : vidx)
    for (int bcol : vidx) {
      T s = T(0);
      for (int j = 0; j < c; ++j) s += (*un)[a * c + j] * (*vn)[bcol * c + j];
      (*sim)[a * k + bcol] = s;
    }

  // loss = (1/Nv) sum_l [ logsumexp_k(sim/tau) - sim_ll/tau ]
  auto softmax = std::make_shared<std::vector<T>>(static_cast<size_t>(k) * k,
                                                  T(0));
  T loss = T(0);
  for (int l : vidx) {
    T mx = -std::numeric_limits<T>::infinity();
    for (int kk : vidx) mx = std::max(mx, (*sim)[l * k + kk] / tau);
    T sum = T(0);
    for (int kk : vidx) {
      const T e = std::exp((*sim)[l * k + kk] / tau - mx);
      (*softmax)[l * k + kk] = e;
      sum += e;
    }
    for (int kk : vidx) (*softmax)[l * k + kk] /= sum;
    loss += mx + std::log(sum) - (*sim)[l * k + l] / tau;
  }
  loss /= static_cast<T>(nv);

  Tensor<T> out = Tensor<T>::make(
      {1}, {p, r},
      [un, vn, pnorm, rnorm, sim, softmax, vidx, nv, k, c, tau,
       cosine](Node<T>& o) {
        auto& pp = *o.parents[0];
        auto& pr = *o.parents[1];
        const T g0 = o.g[0];
        const T norm = g0 / (static_cast<T>(nv) * tau);
        if (pp.requires_grad) pp.ensure_grad();
        if (pr.requires_grad) pr.ensure_grad();
        for (int l : vidx) {
          for (int kk : vidx) {
            const T d = norm * ((*softmax)[l * k + kk] - (l == kk ? T(1)
                                                                  : T(0)));
            if (d == T(0)) continue;
            const T s = (*sim)[l * k + kk];
            if (pp.requires_grad) {
              const T ip = T(1) / (*pnorm)[l];
              for (int j = 0; j < c; ++j) {
                const T ds = cosine ? ((*vn)[kk * c + j] - s * (*un)[l * c + j]) * ip
                                    : (*vn)[kk * c + j];
                pp.g[l * c + j] += d * ds;
              }
            }
            if (pr.requires_grad) {
              const T ir = T(1) / (*rnorm)[kk];
              for (int j = 0; j < c; ++j) {
                const T ds = cosine ? ((*un)[l * c + j] - s * (*vn)[kk * c + j]) * ir
                                    : (*un)[l * c + j];
                pr.g[kk * c + j] += d * ds;
              }
            }
          }
        }
      });
  out.data()[0] = loss;
  return out;
}

}  // namespace landnet::ops

#endif  // LANDNET_CORE_OPS_LOSS_HPP
