#ifndef LANDNET_CORE_OPS_HPP
#define LANDNET_CORE_OPS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "landnet/core/tensor.hpp"

namespace landnet::ops {

template <typename T>
using Node = typename Tensor<T>::Node;

namespace detail {

template <typename T>
inline void accumulate(Node<T>& parent, const T* src, std::int64_t n) {
  parent.ensure_grad();
  T* g = parent.g.data();
  par_for(n, [&](std::int64_t i) { g[i] += src[i]; });
}

inline std::int64_t spatial(const std::vector<int>& shape) {
  return static_cast<std::int64_t>(shape[2]) * shape[3];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.shape() == b.shape(), "add: shape mismatch");
  Tensor<T> out = Tensor<T>::make(a.shape(), {a, b}, [](Node<T>& o) {
    for (int p = 0; p < 2; ++p) {
      auto& par = *o.parents[p];
      if (par.requires_grad) detail::accumulate(par, o.g.data(), o.numel());
    }
  });
  const T* av = a.data();
  const T* bv = b.data();
  T* ov = out.data();
  par_for(a.numel(), [&](std::int64_t i) { ov[i] = av[i] + bv[i]; });
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.shape() == b.shape(), "sub: shape mismatch");
  Tensor<T> out = Tensor<T>::make(a.shape(), {a, b}, [](Node<T>& o) {
    auto& pa = *o.parents[0];
    auto& pb = *o.parents[1];
    if (pa.requires_grad) detail::accumulate(pa, o.g.data(), o.numel());
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::int64_t i = 0; i < o.numel(); ++i) pb.g[i] -= o.g[i];
    }
  });
  const T* av = a.data();
  const T* bv = b.data();
  T* ov = out.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) ov[i] = av[i] - bv[i];
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.shape() == b.shape(), "mul: shape mismatch");
  Tensor<T> out = Tensor<T>::make(a.shape(), {a, b}, [](Node<T>& o) {
    auto& pa = *o.parents[0];
    auto& pb = *o.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      T* g = pa.g.data();
      par_for(o.numel(), [&](std::int64_t i) { g[i] += o.g[i] * pb.v[i]; });
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      T* g = pb.g.data();
      par_for(o.numel(), [&](std::int64_t i) { g[i] += o.g[i] * pa.v[i]; });
    }
  });
  const T* av = a.data();
  const T* bv = b.data();
  T* ov = out.data();
  par_for(a.numel(), [&](std::int64_t i) { ov[i] = av[i] * bv[i]; });
  return out;
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.shape() == b.shape(), "div: shape mismatch");
  Tensor<T> out = Tensor<T>::make(a.shape(), {a, b}, [](Node<T>& o) {
    auto& pa = *o.parents[0];
    auto& pb = *o.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::int64_t i = 0; i < o.numel(); ++i) pa.g[i] += o.g[i] / pb.v[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::int64_t i = 0; i < o.numel(); ++i)
        pb.g[i] -= o.g[i] * pa.v[i] / (pb.v[i] * pb.v[i]);
    }
  });
  const T* av = a.data();
  const T* bv = b.data();
  T* ov = out.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) ov[i] = av[i] / bv[i];
  return out;
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  Tensor<T> out = Tensor<T>::make(a.shape(), {a}, [](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (pa.requires_grad) detail::accumulate(pa, o.g.data(), o.numel());
  });
  const T* av = a.data();
  T* ov = out.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) ov[i] = av[i] + s;
  return out;
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  Tensor<T> out = Tensor<T>::make(a.shape(), {a}, [s](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::int64_t i = 0; i < o.numel(); ++i) pa.g[i] += o.g[i] * s;
    }
  });
  const T* av = a.data();
  T* ov = out.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) ov[i] = av[i] * s;
  return out;
}

/// s - a, elementwise.
template <typename T>
Tensor<T> rsub_scalar(T s, const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::make(a.shape(), {a}, [](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::int64_t i = 0; i < o.numel(); ++i) pa.g[i] -= o.g[i];
    }
  });
  const T* av = a.data();
  T* ov = out.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) ov[i] = s - av[i];
  return out;
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::make(a.shape(), {a}, [](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    T* g = pa.g.data();
    par_for(o.numel(), [&](std::int64_t i) {
      if (o.v[i] > T(0)) g[i] += o.g[i];
    });
  });
  const T* av = a.data();
  T* ov = out.data();
  par_for(a.numel(),
          [&](std::int64_t i) { ov[i] = av[i] > T(0) ? av[i] : T(0); });
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::make(a.shape(), {a}, [](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    T* g = pa.g.data();
    par_for(o.numel(), [&](std::int64_t i) {
      g[i] += o.g[i] * o.v[i] * (T(1) - o.v[i]);
    });
  });
  const T* av = a.data();
  T* ov = out.data();
  par_for(a.numel(), [&](std::int64_t i) {
    ov[i] = T(1) / (T(1) + std::exp(-av[i]));
  });
  return out;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  constexpr T kInvSqrt2 = T(0.70710678118654752440);
  Tensor<T> out = Tensor<T>::make(a.shape(), {a}, [kInvSqrt2](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    constexpr T kInvSqrt2Pi = T(0.39894228040143267794);
    for (std::int64_t i = 0; i < o.numel(); ++i) {
      const T x = pa.v[i];
      const T cdf = T(0.5) * (T(1) + std::erf(x * kInvSqrt2));
      const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * x * x);
      pa.g[i] += o.g[i] * (cdf + x * pdf);
    }
  });
  const T* av = a.data();
  T* ov = out.data();
  for (std::int64_t i = 0; i < a.numel(); ++i)
    ov[i] = T(0.5) * av[i] * (T(1) + std::erf(av[i] * kInvSqrt2));
  return out;
}

// ---------------------------------------------------------------------------
// Reductions and reshaping
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::make({1}, {a}, [](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::int64_t i = 0; i < pa.numel(); ++i) pa.g[i] += o.g[0];
  });
  T acc = T(0);
  const T* av = a.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += av[i];
  out.data()[0] = acc;
  return out;
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  return mul_scalar(sum_all(a), T(1) / static_cast<T>(a.numel()));
}

/// [N,C,H,W] -> [N,C], summing over the spatial dims.
template <typename T>
Tensor<T> sum_spatial(const Tensor<T>& a) {
  check_shape(a.ndim() == 4, "sum_spatial: expected 4D input");
  const int n = a.dim(0), c = a.dim(1);
  const std::int64_t hw = detail::spatial(a.shape());
  Tensor<T> out = Tensor<T>::make({n, c}, {a}, [hw](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::int64_t i = 0; i < o.numel(); ++i) {
      const T g = o.g[i];
      T* dst = pa.g.data() + i * hw;
      for (std::int64_t j = 0; j < hw; ++j) dst[j] += g;
    }
  });
  const T* av = a.data();
  T* ov = out.data();
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n) * c; ++i) {
    T acc = T(0);
    const T* src = av + i * hw;
    for (std::int64_t j = 0; j < hw; ++j) acc += src[j];
    ov[i] = acc;
  }
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, std::vector<int> shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  check_shape(n == a.numel(), "reshape: element count mismatch");
  Tensor<T> out = Tensor<T>::make(std::move(shape), {a}, [](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (pa.requires_grad) detail::accumulate(pa, o.g.data(), o.numel());
  });
  std::copy(a.data(), a.data() + a.numel(), out.data());
  return out;
}

/// Concatenate 4D tensors along the channel axis.
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
  check_shape(!xs.empty(), "concat_channels: empty input list");
  const int n = xs[0].dim(0), h = xs[0].dim(2), w = xs[0].dim(3);
  int c_total = 0;
  for (const auto& x : xs) {
    check_shape(x.ndim() == 4 && x.dim(0) == n && x.dim(2) == h &&
                    x.dim(3) == w,
                "concat_channels: incompatible shapes");
    c_total += x.dim(1);
  }
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  std::vector<int> sizes;
  for (const auto& x : xs) sizes.push_back(x.dim(1));
  Tensor<T> out =
      Tensor<T>::make({n, c_total, h, w}, xs, [sizes, hw, c_total](Node<T>& o) {
        const int nn = o.shape[0];
        int offset = 0;
        for (size_t p = 0; p < o.parents.size(); ++p) {
          auto& pa = *o.parents[p];
          const int ci = sizes[p];
          if (pa.requires_grad) {
            pa.ensure_grad();
            for (int b = 0; b < nn; ++b) {
              const T* src = o.g.data() + (static_cast<std::int64_t>(b) *
                                               c_total + offset) * hw;
              T* dst = pa.g.data() + static_cast<std::int64_t>(b) * ci * hw;
              for (std::int64_t i = 0; i < ci * hw; ++i) dst[i] += src[i];
            }
          }
          offset += ci;
        }
      });
  int offset = 0;
  for (const auto& x : xs) {
    const int ci = x.dim(1);
    for (int b = 0; b < n; ++b) {
      const T* src = x.data() + static_cast<std::int64_t>(b) * ci * hw;
      T* dst = out.data() +
               (static_cast<std::int64_t>(b) * c_total + offset) * hw;
      std::copy(src, src + ci * hw, dst);
    }
    offset += ci;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

/// [M,K] x [K,N] -> [M,N].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(0),
              "matmul: incompatible shapes");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> out = Tensor<T>::make({m, n}, {a, b}, [m, k, n](Node<T>& o) {
    auto& pa = *o.parents[0];
    auto& pb = *o.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      // dA += dC * B^T
      gemm(false, true, m, k, n, T(1), o.g.data(), n, pb.v.data(), n, T(1),
           pa.g.data(), k);
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      // dB += A^T * dC
      gemm(true, false, k, n, m, T(1), pa.v.data(), k, o.g.data(), n, T(1),
           pb.g.data(), n);
    }
  });
  gemm(false, false, m, n, k, T(1), a.data(), k, b.data(), n, T(0), out.data(),
       n);
  return out;
}

/// x[M,K] * W[N,K]^T + b[N] -> [M,N]. Torch-style weight layout.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  check_shape(x.ndim() == 2 && w.ndim() == 2 && x.dim(1) == w.dim(1) &&
                  b.numel() == w.dim(0),
              "linear: incompatible shapes");
  const int m = x.dim(0), k = x.dim(1), n = w.dim(0);
  Tensor<T> out = Tensor<T>::make({m, n}, {x, w, b}, [m, k, n](Node<T>& o) {
    auto& px = *o.parents[0];
    auto& pw = *o.parents[1];
    auto& pb = *o.parents[2];
    if (px.requires_grad) {
      px.ensure_grad();
      gemm(false, false, m, k, n, T(1), o.g.data(), n, pw.v.data(), k, T(1),
           px.g.data(), k);
    }
    if (pw.requires_grad) {
      pw.ensure_grad();
      gemm(true, false, n, k, m, T(1), o.g.data(), n, px.v.data(), k, T(1),
           pw.g.data(), k);
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) pb.g[j] += o.g[i * n + j];
    }
  });
  gemm(false, true, m, n, k, T(1), x.data(), k, w.data(), k, T(0), out.data(),
       n);
  const T* bv = b.data();
  T* ov = out.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) ov[i * n + j] += bv[j];
  return out;
}

/// Softmax over the last dimension of an arbitrary-rank tensor.
template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& a) {
  const int d = a.dim(-1);
  const std::int64_t rows = a.numel() / d;
  Tensor<T> out = Tensor<T>::make(a.shape(), {a}, [d, rows](Node<T>& o) {
    auto& pa = *o.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* y = o.v.data() + r * d;
      const T* gy = o.g.data() + r * d;
      T* gx = pa.g.data() + r * d;
      T dot = T(0);
      for (int i = 0; i < d; ++i) dot += gy[i] * y[i];
      for (int i = 0; i < d; ++i) gx[i] += y[i] * (gy[i] - dot);
    }
  });
  const T* av = a.data();
  T* ov = out.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* x = av + r * d;
    T* y = ov + r * d;
    T mx = x[0];
    for (int i = 1; i < d; ++i) mx = std::max(mx, x[i]);
    T sum = T(0);
    for (int i = 0; i < d; ++i) {
      y[i] = std::exp(x[i] - mx);
      sum += y[i];
    }
    const T inv = T(1) / sum;
    for (int i = 0; i < d; ++i) y[i] *= inv;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Broadcast helpers for channel / spatial gating
// ---------------------------------------------------------------------------

/// x[N,C,H,W] scaled per channel by s[N,C].
template <typename T>
Tensor<T> scale_channels(const Tensor<T>& x, const Tensor<T>& s) {
  check_shape(x.ndim() == 4 && s.ndim() == 2 && x.dim(0) == s.dim(0) &&
                  x.dim(1) == s.dim(1),
              "scale_channels: incompatible shapes");
  const std::int64_t hw = detail::spatial(x.shape());
  Tensor<T> out = Tensor<T>::make(x.shape(), {x, s}, [hw](Node<T>& o) {
    auto& px = *o.parents[0];
    auto& ps = *o.parents[1];
    const std::int64_t nc = ps.numel();
    if (px.requires_grad) {
      px.ensure_grad();
      for (std::int64_t i = 0; i < nc; ++i) {
        const T sv = ps.v[i];
        const T* gy = o.g.data() + i * hw;
        T* gx = px.g.data() + i * hw;
        for (std::int64_t j = 0; j < hw; ++j) gx[j] += gy[j] * sv;
      }
    }
    if (ps.requires_grad) {
      ps.ensure_grad();
      for (std::int64_t i = 0; i < nc; ++i) {
        const T* gy = o.g.data() + i * hw;
        const T* xv = px.v.data() + i * hw;
        T acc = T(0);
        for (std::int64_t j = 0; j < hw; ++j) acc += gy[j] * xv[j];
        ps.g[i] += acc;
      }
    }
  });
  const std::int64_t nc = s.numel();
  for (std::int64_t i = 0; i < nc; ++i) {
    const T sv = s.data()[i];
    const T* xv = x.data() + i * hw;
    T* yv = out.data() + i * hw;
    for (std::int64_t j = 0; j < hw; ++j) yv[j] = xv[j] * sv;
  }
  return out;
}

/// x[N,C,H,W] scaled per position by a[N,1,H,W] (broadcast over channels).
template <typename T>
Tensor<T> scale_spatial(const Tensor<T>& x, const Tensor<T>& a) {
  check_shape(x.ndim() == 4 && a.ndim() == 4 && a.dim(1) == 1 &&
                  x.dim(0) == a.dim(0) && x.dim(2) == a.dim(2) &&
                  x.dim(3) == a.dim(3),
              "scale_spatial: incompatible shapes");
  const int n = x.dim(0), c = x.dim(1);
  const std::int64_t hw = detail::spatial(x.shape());
  Tensor<T> out = Tensor<T>::make(x.shape(), {x, a}, [n, c, hw](Node<T>& o) {
    auto& px = *o.parents[0];
    auto& pa = *o.parents[1];
    if (px.requires_grad) {
      px.ensure_grad();
      for (int b = 0; b < n; ++b) {
        const T* av = pa.v.data() + b * hw;
        for (int ch = 0; ch < c; ++ch) {
          const std::int64_t base = (static_cast<std::int64_t>(b) * c + ch) * hw;
          for (std::int64_t j = 0; j < hw; ++j)
            px.g[base + j] += o.g[base + j] * av[j];
        }
      }
    }
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (int b = 0; b < n; ++b) {
        T* ga = pa.g.data() + b * hw;
        for (int ch = 0; ch < c; ++ch) {
          const std::int64_t base = (static_cast<std::int64_t>(b) * c + ch) * hw;
          for (std::int64_t j = 0; j < hw; ++j)
            ga[j] += o.g[base + j] * px.v[base + j];
        }
      }
    }
  });
  for (int b = 0; b < n; ++b) {
    const T* av = a.data() + b * hw;
    for (int ch = 0; ch < c; ++ch) {
      const std::int64_t base = (static_cast<std::int64_t>(b) * c + ch) * hw;
      const T* xv = x.data() + base;
      T* yv = out.data() + base;
      for (std::int64_t j = 0; j < hw; ++j) yv[j] = xv[j] * av[j];
    }
  }
  return out;
}

/// [N,C] -> [N,C,S,S], value replicated over the spatial grid.
template <typename T>
Tensor<T> broadcast_spatial(const Tensor<T>& v, int s) {
  check_shape(v.ndim() == 2, "broadcast_spatial: expected [N,C] input");
  const int n = v.dim(0), c = v.dim(1);
  const std::int64_t ss = static_cast<std::int64_t>(s) * s;
  Tensor<T> out = Tensor<T>::make({n, c, s, s}, {v}, [ss](Node<T>& o) {
    auto& pv = *o.parents[0];
    if (!pv.requires_grad) return;
    pv.ensure_grad();
    for (std::int64_t i = 0; i < pv.numel(); ++i) {
      const T* gy = o.g.data() + i * ss;
      T acc = T(0);
      for (std::int64_t j = 0; j < ss; ++j) acc += gy[j];
      pv.g[i] += acc;
    }
  });
  for (std::int64_t i = 0; i < v.numel(); ++i) {
    T* dst = out.data() + i * ss;
    std::fill(dst, dst + ss, v.data()[i]);
  }
  return out;
}

/// Global average pool: [N,C,H,W] -> [N,C].
template <typename T>
Tensor<T> global_avgpool(const Tensor<T>& x) {
  const std::int64_t hw = detail::spatial(x.shape());
  return mul_scalar(sum_spatial(x), T(1) / static_cast<T>(hw));
}

}  // namespace landnet::ops

#endif  // LANDNET_CORE_OPS_HPP
