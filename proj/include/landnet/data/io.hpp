#ifndef LANDNET_DATA_IO_HPP
#define LANDNET_DATA_IO_HPP

#include <filesystem>
#include <optional>

#include "landnet/data/types.hpp"

namespace landnet::data {

// PNG helpers. Planar float <-> 8/16-bit image files.

void save_rgb8(const std::filesystem::path& path,
               const std::vector<float>& rgb, int h, int w);
std::vector<float> load_rgb8(const std::filesystem::path& path, int* h,
                             int* w);

/// Binary mask written as 0/255; loaded with the >=128 foreground rule.
void save_mask8(const std::filesystem::path& path,
                const std::vector<float>& mask, int h, int w);
std::vector<float> load_mask8(const std::filesystem::path& path, int* h,
                              int* w);

/// Depth stored as 16-bit grayscale, value = round(depth * 65535).
void save_depth16(const std::filesystem::path& path,
                  const std::vector<float>& depth, int h, int w);
std::vector<float> load_depth16(const std::filesystem::path& path, int* h,
                                int* w);

/// Three-channel 16-bit file for per-class probability maps.
void save_probs16(const std::filesystem::path& path,
                  const std::vector<float>& probs, int h, int w);
std::vector<float> load_probs16(const std::filesystem::path& path, int* h,
                                int* w);

/// Write one frame into the dataset directory layout
/// (images/, masks/<class>/, depth/) under root.
void write_frame(const std::filesystem::path& root, const FrameSample& s);

/// Emit a complete synthetic dataset in the on-disk layout, splitting
/// patients disjointly across train/val/test. Returns the manifest that was
/// written alongside.
SplitManifest write_synthetic_dataset(const std::filesystem::path& root,
                                      const SynthConfig& cfg, int n_train,
                                      int n_val, int n_test,
                                      int frames_per_patient = 4);

}  // namespace landnet::data

#endif  // LANDNET_DATA_IO_HPP
