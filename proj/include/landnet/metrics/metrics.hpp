#ifndef LANDNET_METRICS_METRICS_HPP
#define LANDNET_METRICS_METRICS_HPP

#include <array>
#include <json.hpp>
#include <string>
#include <vector>

namespace landnet::metrics {

inline constexpr std::array<const char*, 3> kClassNames = {"silhouette",
                                                           "ligament",
                                                           "ridge"};

/// Dice score 2|P&G| / (|P|+|G|) in [0,1]; both-empty convention 1.
/// Inputs are H*W arrays; values >= 0.5 count as foreground.
double dsc(const std::vector<float>& pred, const std::vector<float>& gt,
           int h, int w);

/// Intersection over union in [0,1]; both-empty convention 1.
double iou(const std::vector<float>& pred, const std::vector<float>& gt,
           int h, int w);

/// Average symmetric surface distance in pixels. Landmark masks are thin
/// curves, so every foreground pixel counts as surface. Nearest distances
/// come from an exact Euclidean distance transform. Conventions: both empty
/// -> 0; exactly one empty -> image diagonal (penalty).
double assd(const std::vector<float>& pred, const std::vector<float>& gt,
            int h, int w);

/// Exact squared Euclidean distance transform (two-pass lower-envelope
/// algorithm). `foreground` is h*w, nonzero = feature pixel; the result
/// holds squared distance to the nearest feature pixel.
std::vector<double> squared_edt(const std::vector<std::uint8_t>& foreground,
                                int h, int w);

struct ClassMetrics {
  double dsc = 0.0;   // percent
  double iou = 0.0;   // percent
  double assd = 0.0;  // pixels
  int n = 0;          // frames contributing to the averages
};

struct MetricsReport {
  std::array<ClassMetrics, 3> per_class;
  double mean_dsc = 0.0;
  double mean_iou = 0.0;
  double mean_assd = 0.0;
  int n_frames = 0;
  int n_skipped = 0;  // (frame, class) pairs without annotation

  nlohmann::json to_json() const;
  /// Aligned text table, columns ordered DSC (up), IoU (up), Assd (down).
  std::string to_table() const;
};

/// Streaming per-split evaluator. Frames are added one at a time; classes
/// with present=false are skipped for their per-class averages and counted
/// in n_skipped. probs and gt are [3,H,W] arrays.
class SplitEvaluator {
 public:
  explicit SplitEvaluator(double threshold = 0.5) : threshold_(threshold) {}

  void add_frame(const std::string& frame_id, int h, int w,
                 const std::vector<float>& probs,
                 const std::vector<float>& gt,
                 const std::array<bool, 3>& present);

  MetricsReport report() const;

 private:
  double threshold_;
  std::array<double, 3> sum_dsc_{}, sum_iou_{}, sum_assd_{};
  std::array<int, 3> count_{};
  int n_frames_ = 0;
  int n_skipped_ = 0;
};

}  // namespace landnet::metrics

#endif  // LANDNET_METRICS_METRICS_HPP
