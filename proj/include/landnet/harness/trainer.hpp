#ifndef LANDNET_HARNESS_TRAINER_HPP
#define LANDNET_HARNESS_TRAINER_HPP

#include <memory>
#include <optional>

#include "landnet/core/optim.hpp"
#include "landnet/data/l3d.hpp"
#include "landnet/data/synthetic.hpp"
#include "landnet/harness/config.hpp"
#include "landnet/metrics/metrics.hpp"
#include "landnet/model/network.hpp"

namespace landnet::harness {

struct TrainResult {
  std::filesystem::path run_dir;
  std::filesystem::path last_checkpoint;
  std::filesystem::path best_checkpoint;
  double best_val_dsc = -1.0;
  double first_step_total = 0.0;
  int steps = 0;
  std::optional<metrics::MetricsReport> final_val;
};

/// Batched inference over a frame list; returns the per-split metric report
/// at the given binarization threshold. The model is switched to eval mode
/// for the duration.
metrics::MetricsReport run_evaluation(model::LandmarkModel<float>& model,
                                      const std::vector<data::FrameSample>& frames,
                                      int batch_size = 2,
                                      double threshold = 0.5);

/// Training loop: adaptive-moment optimizer, per-epoch cosine annealing
/// from lr to lr_floor, JSON-lines step log, last + best-validation
/// checkpoints. Frozen trunk parameters are never registered with the
/// optimizer.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  TrainResult run();

  model::LandmarkModel<float>& model() { return *model_; }
  const TrainConfig& config() const { return cfg_; }

  int split_size(const std::string& split) const;
  data::FrameSample load_frame(const std::string& split, int index) const;
  std::vector<data::FrameSample> load_split(const std::string& split) const;

 private:
  void save(const std::filesystem::path& dir, int epoch, double best_dsc,
            const nlohmann::json& history);

  TrainConfig cfg_;
  std::unique_ptr<model::LandmarkModel<float>> model_;
  std::unique_ptr<data::FrameDataset> disk_;
  std::shared_ptr<data::DepthProvider> provider_;
};

}  // namespace landnet::harness

#endif  // LANDNET_HARNESS_TRAINER_HPP
