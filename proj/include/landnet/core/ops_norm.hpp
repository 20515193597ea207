#ifndef LANDNET_CORE_OPS_NORM_HPP
#define LANDNET_CORE_OPS_NORM_HPP

#include <cmath>
#include <memory>
#include <vector>

#include "landnet/core/ops.hpp"

namespace landnet::ops {

/// Batch normalization over [N,C,H,W]. In training mode batch statistics are
/// used and the running buffers are updated in place (they are module state,
/// not graph nodes). In eval mode the running statistics are applied.
template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& x, const Tensor<T>& gamma,
                       const Tensor<T>& beta, std::vector<T>& running_mean,
                       std::vector<T>& running_var, bool training,
                       T momentum = T(0.1), T eps = T(1e-5)) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  check_shape(gamma.numel() == c && beta.numel() == c &&
                  static_cast<int>(running_mean.size()) == c &&
                  static_cast<int>(running_var.size()) == c,
              "batch_norm2d: parameter size mismatch");
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  const std::int64_t m = static_cast<std::int64_t>(n) * hw;

  auto mean = std::make_shared<std::vector<T>>(c, T(0));
  auto inv_std = std::make_shared<std::vector<T>>(c, T(0));

  if (training) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
      // single pass: sum and sum of squares
      T acc = T(0), acc2 = T(0);
      for (int b = 0; b < n; ++b) {
        const T* src = x.data() + (static_cast<std::int64_t>(b) * c + ch) * hw;
        for (std::int64_t i = 0; i < hw; ++i) {
          acc += src[i];
          acc2 += src[i] * src[i];
        }
      }
      const T mu = acc / static_cast<T>(m);
      const T var = std::max(T(0), acc2 / static_cast<T>(m) - mu * mu);
      (*mean)[ch] = mu;
      (*inv_std)[ch] = T(1) / std::sqrt(var + eps);
      const T unbiased = m > 1 ? var * static_cast<T>(m) / static_cast<T>(m - 1)
                               : var;
      running_mean[ch] = (T(1) - momentum) * running_mean[ch] + momentum * mu;
      running_var[ch] = (T(1) - momentum) * running_var[ch] +
                        momentum * unbiased;
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      (*mean)[ch] = running_mean[ch];
      (*inv_std)[ch] = T(1) / std::sqrt(running_var[ch] + eps);
    }
  }

  Tensor<T> out = Tensor<T>::make(
      x.shape(), {x, gamma, beta},
      [mean, inv_std, n, c, hw, m, training](Node<T>& o) {
        auto& px = *o.parents[0];
        auto& pg = *o.parents[1];
        auto& pb = *o.parents[2];
        std::vector<T> sum_dy(c, T(0)), sum_dy_xhat(c, T(0));
#pragma omp parallel for schedule(static)
        for (int ch = 0; ch < c; ++ch) {
          const T mu = (*mean)[ch];
          const T is = (*inv_std)[ch];
          T sdy = T(0), sdx = T(0);
          for (int b = 0; b < n; ++b) {
            const std::int64_t base =
                (static_cast<std::int64_t>(b) * c + ch) * hw;
            for (std::int64_t i = 0; i < hw; ++i) {
              const T dy = o.g[base + i];
              sdy += dy;
              sdx += dy * (px.v[base + i] - mu) * is;
            }
          }
          sum_dy[ch] = sdy;
          sum_dy_xhat[ch] = sdx;
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (int ch = 0; ch < c; ++ch) pb.g[ch] += sum_dy[ch];
        }
        if (pg.requires_grad) {
          pg.ensure_grad();
          for (int ch = 0; ch < c; ++ch) pg.g[ch] += sum_dy_xhat[ch];
        }
        if (px.requires_grad) {
          px.ensure_grad();
#pragma omp parallel for schedule(static)
          for (int ch = 0; ch < c; ++ch) {
            const T mu = (*mean)[ch];
            const T is = (*inv_std)[ch];
            const T gam = pg.v[ch];
            if (training) {
              const T k1 = sum_dy[ch] / static_cast<T>(m);
              const T k2 = sum_dy_xhat[ch] / static_cast<T>(m);
              for (int b = 0; b < n; ++b) {
                const std::int64_t base =
                    (static_cast<std::int64_t>(b) * c + ch) * hw;
                for (std::int64_t i = 0; i < hw; ++i) {
                  const T xhat = (px.v[base + i] - mu) * is;
                  px.g[base + i] +=
                      gam * is * (o.g[base + i] - k1 - xhat * k2);
                }
              }
            } else {
              for (int b = 0; b < n; ++b) {
                const std::int64_t base =
                    (static_cast<std::int64_t>(b) * c + ch) * hw;
                for (std::int64_t i = 0; i < hw; ++i)
                  px.g[base + i] += o.g[base + i] * gam * is;
              }
            }
          }
        }
      });

#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    const T mu = (*mean)[ch];
    const T is = (*inv_std)[ch];
    const T gam = gamma.data()[ch];
    const T bet = beta.data()[ch];
    for (int b = 0; b < n; ++b) {
      const std::int64_t base = (static_cast<std::int64_t>(b) * c + ch) * hw;
      const T* src = x.data() + base;
      T* dst = out.data() + base;
      for (std::int64_t i = 0; i < hw; ++i)
        dst[i] = gam * (src[i] - mu) * is + bet;
    }
  }
  return out;
}

/// Group normalization over [N,C,H,W]: statistics per (sample, group),
/// batch-size independent.
template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, int groups, T eps = T(1e-5)) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  check_shape(c % groups == 0, "group_norm: channels not divisible by groups");
  check_shape(gamma.numel() == c && beta.numel() == c,
              "group_norm: parameter size mismatch");
  const int cpg = c / groups;
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  const std::int64_t gsize = static_cast<std::int64_t>(cpg) * hw;

  auto mean = std::make_shared<std::vector<T>>(
      static_cast<size_t>(n) * groups, T(0));
  auto inv_std = std::make_shared<std::vector<T>>(
      static_cast<size_t>(n) * groups, T(0));
  for (int b = 0; b < n; ++b) {
    for (int g = 0; g < groups; ++g) {
      const T* src = x.data() +
                     (static_cast<std::int64_t>(b) * c + g * cpg) * hw;
      T acc = T(0);
      for (std::int64_t i = 0; i < gsize; ++i) acc += src[i];
      const T mu = acc / static_cast<T>(gsize);
      T var = T(0);
      for (std::int64_t i = 0; i < gsize; ++i) {
        const T d = src[i] - mu;
        var += d * d;
      }
      var /= static_cast<T>(gsize);
      (*mean)[b * groups + g] = mu;
      (*inv_std)[b * groups + g] = T(1) / std::sqrt(var + eps);
    }
  }

  Tensor<T> out = Tensor<T>::make(
      x.shape(), {x, gamma, beta},
      [mean, inv_std, n, c, groups, cpg, hw, gsize](Node<T>& o) {
        auto& px = *o.parents[0];
        auto& pg = *o.parents[1];
        auto& pb = *o.parents[2];
        if (pg.requires_grad) pg.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        if (px.requires_grad) px.ensure_grad();
        for (int b = 0; b < n; ++b) {
          for (int g = 0; g < groups; ++g) {
            const T mu = (*mean)[b * groups + g];
            const T is = (*inv_std)[b * groups + g];
            const std::int64_t base =
                (static_cast<std::int64_t>(b) * c + g * cpg) * hw;
            // a = gamma * dy; group means of a and a*xhat drive dx.
            T sum_a = T(0), sum_ax = T(0);
            for (int cc = 0; cc < cpg; ++cc) {
              const T gam = pg.v[g * cpg + cc];
              const std::int64_t cb = base + static_cast<std::int64_t>(cc) * hw;
              for (std::int64_t i = 0; i < hw; ++i) {
                const T dy = o.g[cb + i];
                const T xhat = (px.v[cb + i] - mu) * is;
                const T a = gam * dy;
                sum_a += a;
                sum_ax += a * xhat;
                if (pg.requires_grad) pg.g[g * cpg + cc] += dy * xhat;
                if (pb.requires_grad) pb.g[g * cpg + cc] += dy;
              }
            }
            if (px.requires_grad) {
              const T k1 = sum_a / static_cast<T>(gsize);
              const T k2 = sum_ax / static_cast<T>(gsize);
              for (int cc = 0; cc < cpg; ++cc) {
                const T gam = pg.v[g * cpg + cc];
                const std::int64_t cb =
                    base + static_cast<std::int64_t>(cc) * hw;
                for (std::int64_t i = 0; i < hw; ++i) {
                  const T xhat = (px.v[cb + i] - mu) * is;
                  px.g[cb + i] +=
                      is * (gam * o.g[cb + i] - k1 - xhat * k2);
                }
              }
            }
          }
        }
      });

  for (int b = 0; b < n; ++b) {
    for (int g = 0; g < groups; ++g) {
      const T mu = (*mean)[b * groups + g];
      const T is = (*inv_std)[b * groups + g];
      for (int cc = 0; cc < cpg; ++cc) {
        const T gam = gamma.data()[g * cpg + cc];
        const T bet = beta.data()[g * cpg + cc];
        const std::int64_t base =
            (static_cast<std::int64_t>(b) * c + g * cpg + cc) * hw;
        const T* src = x.data() + base;
        T* dst = out.data() + base;
        for (std::int64_t i = 0; i < hw; ++i)
          dst[i] = gam * (src[i] - mu) * is + bet;
      }
    }
  }
  return out;
}

}  // namespace landnet::ops

#endif  // LANDNET_CORE_OPS_NORM_HPP
