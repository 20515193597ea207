#ifndef LANDNET_HARNESS_EVALUATOR_HPP
#define LANDNET_HARNESS_EVALUATOR_HPP

#include "landnet/harness/trainer.hpp"

namespace landnet::harness {

struct EvalRequest {
  std::filesystem::path checkpoint;
  std::string split = "test";
  std::string data_root_override;  // empty: use the checkpoint's dataset
  std::filesystem::path out_dir;   // empty: no files written
  double threshold = 0.5;
  /// Optional architecture expectation (e.g. from explicit eval-time
  /// flags); a mismatch with the checkpoint is a compatibility error.
  std::string expect_arch_hash;
};

/// Rebuild the model recorded in a checkpoint, run inference over the
/// requested split and report metrics (JSON + aligned text table when
/// out_dir is set).
metrics::MetricsReport evaluate_checkpoint(const EvalRequest& req);

/// Read checkpoint metadata without loading tensors.
nlohmann::json checkpoint_meta(const std::filesystem::path& checkpoint);

// -- ablation grids ----------------------------------------------------------

struct AblationRow {
  std::string name;
  model::Ablation ablation;
  std::string rgb_backbone = "residual";
  std::string depth_backbone = "attention";
  bool ok = false;
  std::string error;
  metrics::MetricsReport report;
};

/// Preset grids: "table3" toggles the four key designs (7 rows),
/// "table4" sweeps the backbone assignments (4 rows).
std::vector<AblationRow> ablation_grid(const std::string& grid);

/// Train and evaluate every row under one seed; failures are recorded per
/// row and do not stop the sweep.
std::vector<AblationRow> run_ablation(const TrainConfig& base,
                                      std::vector<AblationRow> rows,
                                      const std::string& eval_split = "val");

std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace landnet::harness

#endif  // LANDNET_HARNESS_EVALUATOR_HPP
