#ifndef LANDNET_DATA_DEPTH_HPP
#define LANDNET_DATA_DEPTH_HPP

#include <memory>

#include "landnet/data/types.hpp"

namespace landnet::data {

/// Pluggable monocular depth source. Implementations take an rgb frame
/// ([3,H,W] in [0,1]) and return a normalized relative depth map [1,H,W]
/// in [0,1]. Precomputed per-frame depth files bypass this interface
/// entirely (the dataset loader reads them directly).
class DepthProvider {
 public:
  virtual ~DepthProvider() = default;
  virtual std::vector<float> estimate(const std::vector<float>& rgb, int h,
                                      int w) const = 0;
  virtual const char* name() const = 0;
};

/// Desk-scale stand-in for an external depth estimator: grayscale
/// luminance, Gaussian-blurred, min-max normalized to [0,1]. A constant
/// input maps to a constant 0.5 map.
class LuminanceProxyDepth : public DepthProvider {
 public:
  explicit LuminanceProxyDepth(double sigma = 2.0) : sigma_(sigma) {}
  std::vector<float> estimate(const std::vector<float>& rgb, int h,
                              int w) const override;
  const char* name() const override { return "luminance_proxy"; }

 private:
  double sigma_;
};

/// Validated call through the provider interface: checks the returned shape
/// and value range and raises a provider error otherwise.
std::vector<float> run_depth_provider(const DepthProvider& provider,
                                      const std::vector<float>& rgb, int h,
                                      int w);

}  // namespace landnet::data

#endif  // LANDNET_DATA_DEPTH_HPP
