#ifndef LANDNET_DATA_AUGMENT_HPP
#define LANDNET_DATA_AUGMENT_HPP

#include "landnet/data/types.hpp"

namespace landnet::data {

/// Geometric augmentation parameters. The same transform is applied to rgb,
/// depth and every mask: optional horizontal flip, rotation about the image
/// center, then a crop of relative scale `crop_scale` (resized back to the
/// original resolution). Identity parameters reproduce the input exactly.
struct AugmentParams {
  bool flip = false;
  double angle_deg = 0.0;
  double crop_scale = 1.0;
  double crop_off_x = 0.0;  // crop window origin, source pixels
  double crop_off_y = 0.0;

  bool is_identity() const {
    return !flip && angle_deg == 0.0 && crop_scale == 1.0 &&
           crop_off_x == 0.0 && crop_off_y == 0.0;
  }
};

/// Draw parameters from a seeded stream: flip with p=0.5, rotation uniform
/// in +-15 degrees, crop scale uniform in [0.8, 1.0] with a uniform offset.
AugmentParams draw_augment_params(Rng& rng, int h, int w);

/// Apply a fixed transform. rgb/depth are sampled bilinearly (border
/// clamped), masks with nearest neighbor (outside = background), so masks
/// stay exactly binary.
FrameSample apply_augment(const FrameSample& sample,
                          const AugmentParams& params);

/// Seeded convenience wrapper: draw + apply.
FrameSample augment(const FrameSample& sample, std::uint64_t seed);

}  // namespace landnet::data

#endif  // LANDNET_DATA_AUGMENT_HPP
