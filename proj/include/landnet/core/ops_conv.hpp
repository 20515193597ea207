#ifndef LANDNET_CORE_OPS_CONV_HPP
#define LANDNET_CORE_OPS_CONV_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "landnet/core/ops.hpp"

namespace landnet::ops {

namespace detail {

/// Caffe-style im2col: [C,H,W] -> [C*kh*kw, OH*OW], row-major. Stride-1
/// rows are contiguous shifted copies of the input row, handled as block
/// copies with zero-filled borders.
template <typename T>
void im2col(const T* data, int c, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, T* col) {
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        T* dst = col + ((static_cast<std::int64_t>(ch) * kh + ky) * kw + kx) *
                           oh * ow;
        const T* src = data + static_cast<std::int64_t>(ch) * h * w;
        if (stride == 1) {
          // valid ox range: ox + kx - pad in [0, w)
          const int x_lo = std::max(0, pad - kx);
          const int x_hi = std::min(ow, w + pad - kx);
          for (int oy = 0; oy < oh; ++oy, dst += ow) {
            const int iy = oy - pad + ky;
            if (iy < 0 || iy >= h) {
              std::fill(dst, dst + ow, T(0));
              continue;
            }
            if (x_lo > 0) std::fill(dst, dst + x_lo, T(0));
            if (x_hi > x_lo)
              std::copy(src + iy * w + x_lo + kx - pad,
                        src + iy * w + x_hi + kx - pad, dst + x_lo);
            if (x_hi < ow) std::fill(dst + std::max(x_lo, x_hi), dst + ow, T(0));
          }
        } else {
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) {
              std::fill(dst, dst + ow, T(0));
              dst += ow;
              continue;
            }
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - pad + kx;
              *dst++ = (ix >= 0 && ix < w) ? src[iy * w + ix] : T(0);
            }
          }
        }
      }
    }
  }
}

/// Scatter-add transpose of im2col. Channels are independent, so the outer
/// loop parallelizes without write conflicts.
template <typename T>
void col2im_add(const T* col, int c, int h, int w, int kh, int kw, int stride,
                int pad, int oh, int ow, T* data) {
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const T* src = col + ((static_cast<std::int64_t>(ch) * kh + ky) * kw +
                              kx) *
                                 oh * ow;
        T* dst = data + static_cast<std::int64_t>(ch) * h * w;
        if (stride == 1) {
          const int x_lo = std::max(0, pad - kx);
          const int x_hi = std::min(ow, w + pad - kx);
          for (int oy = 0; oy < oh; ++oy, src += ow) {
            const int iy = oy - pad + ky;
            if (iy < 0 || iy >= h || x_hi <= x_lo) continue;
            T* drow = dst + iy * w + x_lo + kx - pad;
            const T* srow = src + x_lo;
            for (int i = 0; i < x_hi - x_lo; ++i) drow[i] += srow[i];
          }
        } else {
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) {
              src += ow;
              continue;
            }
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < w) dst[iy * w + ix] += src[ox];
            }
            src += ow;
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 2D convolution, square kernel. x[N,Cin,H,W], w[Cout,Cin,k,k], b[Cout].
/// im2col + GEMM; the column buffer is recomputed in the backward pass
/// instead of being stored with the graph.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride, int pad) {
  check_shape(x.ndim() == 4 && w.ndim() == 4, "conv2d: expected 4D tensors");
  check_shape(x.dim(1) == w.dim(1), "conv2d: channel mismatch");
  check_shape(w.dim(2) == w.dim(3), "conv2d: kernel must be square");
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), ww = x.dim(3);
  const int cout = w.dim(0), k = w.dim(2);
  check_shape(b.numel() == cout, "conv2d: bias size mismatch");
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (ww + 2 * pad - k) / stride + 1;
  check_shape(oh > 0 && ow > 0, "conv2d: output would be empty");
  const int ckk = cin * k * k;
  const std::int64_t ohw = static_cast<std::int64_t>(oh) * ow;

  Tensor<T> out = Tensor<T>::make(
      {n, cout, oh, ow}, {x, w, b},
      [n, cin, h, ww, cout, k, stride, pad, oh, ow, ckk, ohw](Node<T>& o) {
        auto& px = *o.parents[0];
        auto& pw = *o.parents[1];
        auto& pb = *o.parents[2];
        std::vector<T>& col =
            scratch_buffer<T>(static_cast<size_t>(ckk) * ohw);
        if (px.requires_grad) px.ensure_grad();
        if (pw.requires_grad) pw.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        for (int s = 0; s < n; ++s) {
          const T* gy = o.g.data() + static_cast<std::int64_t>(s) * cout * ohw;
          if (pw.requires_grad || pb.requires_grad) {
            if (pw.requires_grad) {
              detail::im2col(px.v.data() + static_cast<std::int64_t>(s) * cin *
                                               h * ww,
                             cin, h, ww, k, k, stride, pad, oh, ow, col.data());
              // dW += dY * col^T
              gemm(false, true, cout, ckk, static_cast<int>(ohw), T(1), gy,
                   static_cast<int>(ohw), col.data(), static_cast<int>(ohw),
                   T(1), pw.g.data(), ckk);
            }
            if (pb.requires_grad) {
              for (int c = 0; c < cout; ++c) {
                T acc = T(0);
                const T* row = gy + c * ohw;
                for (std::int64_t i = 0; i < ohw; ++i) acc += row[i];
                pb.g[c] += acc;
              }
            }
          }
          if (px.requires_grad) {
            // dcol = W^T * dY, then scatter back to the input image.
            gemm(true, false, ckk, static_cast<int>(ohw), cout, T(1),
                 pw.v.data(), ckk, gy, static_cast<int>(ohw), T(0), col.data(),
                 static_cast<int>(ohw));
            detail::col2im_add(col.data(), cin, h, ww, k, k, stride, pad, oh,
                               ow,
                               px.g.data() + static_cast<std::int64_t>(s) *
                                                 cin * h * ww);
          }
        }
      });

  std::vector<T>& col = scratch_buffer<T>(static_cast<size_t>(ckk) * ohw);
  for (int s = 0; s < n; ++s) {
    detail::im2col(x.data() + static_cast<std::int64_t>(s) * cin * h * ww, cin,
                   h, ww, k, k, stride, pad, oh, ow, col.data());
    T* y = out.data() + static_cast<std::int64_t>(s) * cout * ohw;
    gemm(false, false, cout, static_cast<int>(ohw), ckk, T(1), w.data(), ckk,
         col.data(), static_cast<int>(ohw), T(0), y, static_cast<int>(ohw));
    par_for(static_cast<std::int64_t>(cout) * ohw, [&](std::int64_t i) {
      y[i] += b.data()[i / ohw];
    });
  }
  return out;
}

/// Max pooling, kernel 3, stride 2, pad 1 (the residual-encoder stem pool).
template <typename T>
Tensor<T> maxpool3x3_s2(const Tensor<T>& x) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int oh = (h + 2 - 3) / 2 + 1;
  const int ow = (w + 2 - 3) / 2 + 1;
  const std::int64_t ohw = static_cast<std::int64_t>(oh) * ow;
  auto argmax = std::make_shared<std::vector<std::int32_t>>(
      static_cast<size_t>(n) * c * ohw);
  Tensor<T> out =
      Tensor<T>::make({n, c, oh, ow}, {x}, [argmax, h, w, ohw](Node<T>& o) {
        auto& px = *o.parents[0];
        if (!px.requires_grad) return;
        px.ensure_grad();
        const std::int64_t planes = o.numel() / ohw;
#pragma omp parallel for schedule(static)
        for (std::int64_t p = 0; p < planes; ++p) {
          const T* gy = o.g.data() + p * ohw;
          const std::int32_t* am = argmax->data() + p * ohw;
          T* gx = px.g.data() + p * static_cast<std::int64_t>(h) * w;
          for (std::int64_t i = 0; i < ohw; ++i) gx[am[i]] += gy[i];
        }
      });
  const std::int64_t planes = static_cast<std::int64_t>(n) * c;
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* src = x.data() + p * h * w;
    T* dst = out.data() + p * ohw;
    std::int32_t* am = argmax->data() + p * ohw;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T best = -std::numeric_limits<T>::infinity();
        int best_idx = 0;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy * 2 - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox * 2 - 1 + kx;
            if (ix < 0 || ix >= w) continue;
            const T v = src[iy * w + ix];
            if (v > best) {
              best = v;
              best_idx = iy * w + ix;
            }
          }
        }
        dst[oy * ow + ox] = best;
        am[oy * ow + ox] = best_idx;
      }
    }
  }
  return out;
}

/// 3x3 average pooling, stride 1, pad 1, divisor = number of in-bounds cells
/// (so constant inputs are reproduced exactly at the borders).
template <typename T>
Tensor<T> avgpool3x3_s1(const Tensor<T>& x) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  Tensor<T> out = Tensor<T>::make(x.shape(), {x}, [h, w, hw](Node<T>& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    px.ensure_grad();
    const std::int64_t planes = o.numel() / hw;
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < planes; ++p) {
      const T* gy = o.g.data() + p * hw;
      T* gx = px.g.data() + p * hw;
      for (int oy = 0; oy < h; ++oy) {
        for (int ox = 0; ox < w; ++ox) {
          const int y0 = std::max(0, oy - 1), y1 = std::min(h - 1, oy + 1);
          const int x0 = std::max(0, ox - 1), x1 = std::min(w - 1, ox + 1);
          const T g = gy[oy * w + ox] /
                      static_cast<T>((y1 - y0 + 1) * (x1 - x0 + 1));
          for (int iy = y0; iy <= y1; ++iy)
            for (int ix = x0; ix <= x1; ++ix) gx[iy * w + ix] += g;
        }
      }
    }
  });
  const std::int64_t planes = static_cast<std::int64_t>(n) * c;
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* src = x.data() + p * hw;
    T* dst = out.data() + p * hw;
    for (int oy = 0; oy < h; ++oy) {
      for (int ox = 0; ox < w; ++ox) {
        const int y0 = std::max(0, oy - 1), y1 = std::min(h - 1, oy + 1);
        const int x0 = std::max(0, ox - 1), x1 = std::min(w - 1, ox + 1);
        T acc = T(0);
        for (int iy = y0; iy <= y1; ++iy)
          for (int ix = x0; ix <= x1; ++ix) acc += src[iy * w + ix];
        dst[oy * w + ox] = acc / static_cast<T>((y1 - y0 + 1) * (x1 - x0 + 1));
      }
    }
  }
  return out;
}

/// Bilinear resize to (oh, ow), half-pixel centers (align_corners=false).
template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int oh, int ow) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t ihw = static_cast<std::int64_t>(h) * w;
  const std::int64_t ohw = static_cast<std::int64_t>(oh) * ow;
  const double sy = static_cast<double>(h) / oh;
  const double sx = static_cast<double>(w) / ow;

  // Precompute 1D interpolation taps once; shared with the backward pass.
  struct Tap {
    int i0, i1;
    T w0, w1;
  };
  auto ytap = std::make_shared<std::vector<Tap>>(oh);
  auto xtap = std::make_shared<std::vector<Tap>>(ow);
  auto fill = [](std::vector<Tap>& taps, int out_n, int in_n, double scale) {
    for (int o = 0; o < out_n; ++o) {
      double f = (o + 0.5) * scale - 0.5;
      f = std::max(0.0, std::min(f, static_cast<double>(in_n - 1)));
      const int i0 = static_cast<int>(std::floor(f));
      const int i1 = std::min(i0 + 1, in_n - 1);
      const T r = static_cast<T>(f - i0);
      taps[o] = {i0, i1, T(1) - r, r};
    }
  };
  fill(*ytap, oh, h, sy);
  fill(*xtap, ow, w, sx);

  Tensor<T> out = Tensor<T>::make(
      {n, c, oh, ow}, {x}, [ytap, xtap, oh, ow, w, ihw, ohw](Node<T>& o) {
        auto& px = *o.parents[0];
        if (!px.requires_grad) return;
        px.ensure_grad();
        const std::int64_t planes = o.numel() / ohw;
#pragma omp parallel for schedule(static)
        for (std::int64_t p = 0; p < planes; ++p) {
          const T* gy = o.g.data() + p * ohw;
          T* gx = px.g.data() + p * ihw;
          for (int oy = 0; oy < oh; ++oy) {
            const auto& ty = (*ytap)[oy];
            for (int ox = 0; ox < ow; ++ox) {
              const auto& tx = (*xtap)[ox];
              const T g = gy[oy * ow + ox];
              gx[ty.i0 * w + tx.i0] += g * ty.w0 * tx.w0;
              gx[ty.i0 * w + tx.i1] += g * ty.w0 * tx.w1;
              gx[ty.i1 * w + tx.i0] += g * ty.w1 * tx.w0;
              gx[ty.i1 * w + tx.i1] += g * ty.w1 * tx.w1;
            }
          }
        }
      });
  const std::int64_t planes = static_cast<std::int64_t>(n) * c;
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* src = x.data() + p * ihw;
    T* dst = out.data() + p * ohw;
    for (int oy = 0; oy < oh; ++oy) {
      const auto& ty = (*ytap)[oy];
      for (int ox = 0; ox < ow; ++ox) {
        const auto& tx = (*xtap)[ox];
        dst[oy * ow + ox] = ty.w0 * (tx.w0 * src[ty.i0 * w + tx.i0] +
                                     tx.w1 * src[ty.i0 * w + tx.i1]) +
                            ty.w1 * (tx.w0 * src[ty.i1 * w + tx.i0] +
                                     tx.w1 * src[ty.i1 * w + tx.i1]);
      }
    }
  }
  return out;
}

}  // namespace landnet::ops

#endif  // LANDNET_CORE_OPS_CONV_HPP
