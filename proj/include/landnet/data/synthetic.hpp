#ifndef LANDNET_DATA_SYNTHETIC_HPP
#define LANDNET_DATA_SYNTHETIC_HPP

#include "landnet/data/types.hpp"

namespace landnet::data {

/// Deterministic synthetic frame: a deformed, shaded ellipse ("organ body")
/// over a textured background, with three curvilinear landmark masks
/// (silhouette band, lower ridge arc, near-vertical ligament seam), a smooth
/// height-field depth map, and an optional occluding tool rectangle
/// (probability 0.3) that erases the masks underneath.
/// Pure function of (cfg.seed, index); index must be in [0, cfg.count).
FrameSample generate_synthetic(const SynthConfig& cfg, int index);

}  // namespace landnet::data

#endif  // LANDNET_DATA_SYNTHETIC_HPP
