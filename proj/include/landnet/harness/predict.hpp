#ifndef LANDNET_HARNESS_PREDICT_HPP
#define LANDNET_HARNESS_PREDICT_HPP

#include <filesystem>
#include <string>

namespace landnet::harness {

struct PredictRequest {
  std::filesystem::path checkpoint;
  std::filesystem::path images_dir;
  std::filesystem::path out_dir;
  std::string depth_dir;  // optional precomputed depth files by stem
  double threshold = 0.5;
};

/// Per readable image, writes <stem>_prob.png (16-bit, three class
/// channels) and <stem>_overlay.png (input image with detections drawn:
/// silhouette blue, ligament green, ridge red). Unreadable images are
/// skipped with a warning. Returns the number of successful images; zero
/// with at least one input present is an error condition for the caller.
int run_predict(const PredictRequest& req);

}  // namespace landnet::harness

#endif  // LANDNET_HARNESS_PREDICT_HPP
