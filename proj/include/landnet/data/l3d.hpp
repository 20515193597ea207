#ifndef LANDNET_DATA_L3D_HPP
#define LANDNET_DATA_L3D_HPP

#include <memory>

#include "landnet/data/depth.hpp"
#include "landnet/data/types.hpp"

namespace landnet::data {

/// Ingestion adapter for the on-disk dataset layout:
///   root/images/<frame_id>.png              rgb
///   root/masks/<class>/<frame_id>.png       8-bit, foreground >= 128
///   root/depth/<frame_id>.png               optional 16-bit depth
///   root/manifest.json                      split manifest
/// Frames whose mask file for a class is missing get present=false and an
/// all-zero mask for it. Depth falls back to the configured provider when
/// no depth file exists.
class FrameDataset {
 public:
  FrameDataset(std::filesystem::path root, SplitManifest manifest,
               std::shared_ptr<const DepthProvider> depth_provider);

  /// Open a dataset directory using its manifest.json.
  static FrameDataset open(const std::filesystem::path& root,
                           std::shared_ptr<const DepthProvider> provider);

  FrameSample load_frame(const ManifestEntry& entry) const;

  /// All frames of a split, in manifest order. An empty split yields an
  /// empty sequence.
  std::vector<FrameSample> load_split(const std::string& split) const;

  std::vector<ManifestEntry> split_entries(const std::string& split) const;

  const SplitManifest& manifest() const { return manifest_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  SplitManifest manifest_;
  std::shared_ptr<const DepthProvider> depth_;
};

}  // namespace landnet::data

#endif  // LANDNET_DATA_L3D_HPP
