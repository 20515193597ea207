#include "landnet/data/augment.hpp"

#include <algorithm>
#include <cmath>

namespace landnet::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Output pixel -> source coordinate, as a row-major 2x3 affine [a b tx; c d ty].
struct Affine {
  double a = 1, b = 0, tx = 0;
  double c = 0, d = 1, ty = 0;
};

Affine source_map(const AugmentParams& p, int h, int w) {
  // crop+resize: src1 = off + scale * out
  // rotate by -angle about the center: src2 = R(-t)(src1 - ctr) + ctr
  // flip: src3.x = (W-1) - src2.x
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double t = -p.angle_deg * kPi / 180.0;
  const double ct = std::cos(t), st = std::sin(t);
  const double s = p.crop_scale;

  Affine m;
  // rotation composed with scaling
  m.a = ct * s;
  m.b = -st * s;
  m.c = st * s;
  m.d = ct * s;
  const double ox = p.crop_off_x - cx, oy = p.crop_off_y - cy;
  m.tx = ct * ox - st * oy + cx;
  m.ty = st * ox + ct * oy + cy;
  if (p.flip) {
    m.a = -m.a;
    m.b = -m.b;
    m.tx = (w - 1) - m.tx;
  }
  return m;
}

void warp_bilinear(const float* src, float* dst, int h, int w, int planes,
                   const Affine& m) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double fx = m.a * x + m.b * y + m.tx;
      double fy = m.c * x + m.d * y + m.ty;
      fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
      fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double rx = fx - x0, ry = fy - y0;
      for (int p = 0; p < planes; ++p) {
        const float* sp = src + p * plane;
        const double v = (1 - ry) * ((1 - rx) * sp[y0 * w + x0] +
                                     rx * sp[y0 * w + x1]) +
                         ry * ((1 - rx) * sp[y1 * w + x0] +
                               rx * sp[y1 * w + x1]);
        dst[p * plane + static_cast<size_t>(y) * w + x] =
            static_cast<float>(v);
      }
    }
  }
}

void warp_nearest(const float* src, float* dst, int h, int w, int planes,
                  const Affine& m) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = m.a * x + m.b * y + m.tx;
      const double fy = m.c * x + m.d * y + m.ty;
      const int sx = static_cast<int>(std::lround(fx));
      const int sy = static_cast<int>(std::lround(fy));
      const bool in = sx >= 0 && sx < w && sy >= 0 && sy < h;
      for (int p = 0; p < planes; ++p)
        dst[p * plane + static_cast<size_t>(y) * w + x] =
            in ? src[p * plane + static_cast<size_t>(sy) * w + sx] : 0.0f;
    }
  }
}

}  // namespace

AugmentParams draw_augment_params(Rng& rng, int h, int w) {
  AugmentParams p;
  p.flip = rng.bernoulli(0.5);
  p.angle_deg = rng.uniform(-15.0, 15.0);
  p.crop_scale = rng.uniform(0.8, 1.0);
  p.crop_off_x = rng.uniform(0.0, (1.0 - p.crop_scale) * (w - 1));
  p.crop_off_y = rng.uniform(0.0, (1.0 - p.crop_scale) * (h - 1));
  return p;
}

FrameSample apply_augment(const FrameSample& sample,
                          const AugmentParams& params) {
  if (params.is_identity()) return sample;
  FrameSample out = sample;  // copies ids, shape and presence flags
  const Affine m = source_map(params, sample.h, sample.w);
  warp_bilinear(sample.rgb.data(), out.rgb.data(), sample.h, sample.w, 3, m);
  warp_bilinear(sample.depth.data(), out.depth.data(), sample.h, sample.w, 1,
                m);
  warp_nearest(sample.masks.data(), out.masks.data(), sample.h, sample.w, 3,
               m);
  return out;
}

FrameSample augment(const FrameSample& sample, std::uint64_t seed) {
  Rng rng(seed);
  return apply_augment(sample, draw_augment_params(rng, sample.h, sample.w));
}

}  // namespace landnet::data
