#include "landnet/data/depth.hpp"

#include <algorithm>
#include <cmath>

namespace landnet::data {

namespace {

// separable Gaussian blur with border clamp
void gaussian_blur(std::vector<float>& img, int h, int w, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] =
        static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k = static_cast<float>(k / sum);

  std::vector<float> tmp(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        const int xx = std::clamp(x + i, 0, w - 1);
        acc += kernel[i + radius] * img[static_cast<size_t>(y) * w + xx];
      }
      tmp[static_cast<size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        const int yy = std::clamp(y + i, 0, h - 1);
        acc += kernel[i + radius] * tmp[static_cast<size_t>(yy) * w + x];
      }
      img[static_cast<size_t>(y) * w + x] = acc;
    }
}

}  // namespace

std::vector<float> LuminanceProxyDepth::estimate(
    const std::vector<float>& rgb, int h, int w) const {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<float> d(plane);
  for (std::size_t i = 0; i < plane; ++i)
    d[i] = 0.299f * rgb[i] + 0.587f * rgb[plane + i] +
           0.114f * rgb[2 * plane + i];
  gaussian_blur(d, h, w, sigma_);
  float lo = d[0], hi = d[0];
  for (float v : d) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const float span = hi - lo;
  for (float& v : d) v = span > 1e-12f ? (v - lo) / span : 0.5f;
  return d;
}

std::vector<float> run_depth_provider(const DepthProvider& provider,
                                      const std::vector<float>& rgb, int h,
                                      int w) {
  auto d = provider.estimate(rgb, h, w);
  if (d.size() != static_cast<std::size_t>(h) * w)
    throw DataError(std::string("depth provider '") + provider.name() +
                    "' returned a map of wrong size (" +
                    std::to_string(d.size()) + " values for " +
                    std::to_string(h) + "x" + std::to_string(w) + ")");
  for (float v : d)
    if (!(v >= 0.0f && v <= 1.0f))
      throw DataError(std::string("depth provider '") + provider.name() +
                      "' produced values outside [0,1]");
  return d;
}

}  // namespace landnet::data
