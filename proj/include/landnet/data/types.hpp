#ifndef LANDNET_DATA_TYPES_HPP
#define LANDNET_DATA_TYPES_HPP

#include <array>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "landnet/core/common.hpp"

namespace landnet::data {

/// Landmark class channel order used everywhere: 0 silhouette (s),
/// 1 ligament (l), 2 ridge (r).
inline constexpr std::array<const char*, 3> kClassNames = {"silhouette",
                                                           "ligament",
                                                           "ridge"};
inline constexpr std::array<char, 3> kClassLetters = {'s', 'l', 'r'};

/// One annotated frame. Planar float arrays: rgb [3,H,W] in [0,1],
/// depth [1,H,W] in [0,1], masks [3,H,W] with values exactly 0 or 1.
/// present[c] says whether class c is annotated in this frame; an absent
/// class has an all-zero mask.
struct FrameSample {
  std::string frame_id;
  std::string patient_id;
  int h = 0;
  int w = 0;
  std::vector<float> rgb;
  std::vector<float> depth;
  std::vector<float> masks;
  std::array<bool, 3> present = {true, true, true};

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  const float* mask(int c) const { return masks.data() + c * plane(); }
  float* mask(int c) { return masks.data() + c * plane(); }
};

struct ManifestEntry {
  std::string frame_id;
  std::string patient_id;
  std::string split;               // train | val | test
  std::array<bool, 3> flags = {true, true, true};  // s, l, r annotated
};

/// Frame index with split assignment. Splits must be patient-disjoint and
/// frame ids unique; validate() enforces both.
struct SplitManifest {
  std::vector<ManifestEntry> entries;

  std::map<std::string, int> counts() const;
  void validate() const;

  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static SplitManifest load(const std::filesystem::path& path);
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int count = 10;
  int resolution = 256;       // square frames
  int curve_thickness_px = 9;
  double deformation_amplitude = 1.0;

  void validate() const {
    if (count < 1) throw ConfigError("synthetic: count must be >= 1");
    if (resolution < 64)
      throw ConfigError("synthetic: resolution must be >= 64");
    if (curve_thickness_px < 1)
      throw ConfigError("synthetic: curve thickness must be >= 1");
  }
};

}  // namespace landnet::data

#endif  // LANDNET_DATA_TYPES_HPP
