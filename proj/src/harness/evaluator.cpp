#include "landnet/harness/evaluator.hpp"

#include <fstream>

namespace landnet::harness {

namespace fs = std::filesystem;

nlohmann::json checkpoint_meta(const fs::path& checkpoint) {
  std::ifstream in(checkpoint / "index.json");
  if (!in)
    throw DataError("cannot open checkpoint: " +
                    (checkpoint / "index.json").string());
  return nlohmann::json::parse(in).at("meta");
}

metrics::MetricsReport evaluate_checkpoint(const EvalRequest& req) {
  const nlohmann::json meta = checkpoint_meta(req.checkpoint);
  const std::string stored_hash = meta.at("arch_hash");
  if (!req.expect_arch_hash.empty() && req.expect_arch_hash != stored_hash)
    throw ConfigError(
        "checkpoint architecture mismatch: checkpoint has hash " +
        stored_hash + " but " + req.expect_arch_hash + " was requested");

  TrainConfig cfg = TrainConfig::from_json(meta.at("config"));
  if (!req.data_root_override.empty()) cfg.data_root = req.data_root_override;
  cfg.run_dir = (req.out_dir.empty() ? fs::temp_directory_path() / "landnet_eval"
                                     : req.out_dir)
                    .string();

  Trainer context(cfg);  // reuses dataset plumbing and model construction
  auto params = context.model().parameters();
  load_checkpoint(req.checkpoint, params);

  if (context.split_size(req.split) == 0)
    throw DataError("split '" + req.split + "' is empty for this dataset");
  auto report = run_evaluation(context.model(), context.load_split(req.split),
                               cfg.batch_size, req.threshold);

  if (!req.out_dir.empty()) {
    fs::create_directories(req.out_dir);
    std::ofstream js(req.out_dir / ("metrics_" + req.split + ".json"));
    js << report.to_json().dump(2) << "\n";
    std::ofstream txt(req.out_dir / ("metrics_" + req.split + ".txt"));
    txt << report.to_table();
  }
  return report;
}

std::vector<AblationRow> ablation_grid(const std::string& grid) {
  std::vector<AblationRow> rows;
  auto ab = [](bool bfu, bool dpe, bool cl, bool sga) {
    model::Ablation a;
    a.bfu = bfu;
    a.dpe = dpe;
    a.cl = cl;
    a.sga = sga;
    return a;
  };
  if (grid == "designs") {
    rows.push_back({"baseline-concat", ab(false, false, false, false)});
    rows.push_back({"bfu", ab(true, false, false, false)});
    rows.push_back({"bfu+dpe", ab(true, true, false, false)});
    rows.push_back({"bfu+sga", ab(true, false, false, true)});
    rows.push_back({"bfu+dpe+cl", ab(true, true, true, false)});
    rows.push_back({"dpe+cl+sga", ab(false, true, true, true)});
    rows.push_back({"full", ab(true, true, true, true)});
  } else if (grid == "backbones") {
    AblationRow dual_cnn{"dual-residual", {}};
    dual_cnn.rgb_backbone = "residual";
    dual_cnn.depth_backbone = "residual";
    AblationRow dual_sam{"dual-attention", {}};
    dual_sam.rgb_backbone = "attention";
    dual_sam.depth_backbone = "attention";
    AblationRow swapped{"attention-rgb+residual-depth", {}};
    swapped.rgb_backbone = "attention";
    swapped.depth_backbone = "residual";
    AblationRow standard{"residual-rgb+attention-depth", {}};
    standard.rgb_backbone = "residual";
    standard.depth_backbone = "attention";
    rows = {dual_cnn, dual_sam, swapped, standard};
  } else if (!grid.empty()) {
    throw ConfigError("unknown ablation grid: " + grid +
                      " (expected designs or backbones)");
  }
  return rows;
}

std::vector<AblationRow> run_ablation(const TrainConfig& base,
                                      std::vector<AblationRow> rows,
                                      const std::string& eval_split) {
  for (auto& row : rows) {
    TrainConfig cfg = base;
    cfg.ablation = row.ablation;
    cfg.rgb_backbone = row.rgb_backbone;
    cfg.depth_backbone = row.depth_backbone;
    cfg.run_dir = (fs::path(base.run_dir) / row.name).string();
    try {
      Trainer trainer(cfg);
      trainer.run();
      const std::string split =
          trainer.split_size(eval_split) > 0 ? eval_split : "train";
      row.report = run_evaluation(trainer.model(), trainer.load_split(split),
                                  cfg.batch_size);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::string out =
      "variant                        BFU DPE L_cl SGA    DSC    IoU   Assd\n";
  char line[160];
  for (const auto& r : rows) {
    auto mark = [](bool b) { return b ? "x" : " "; };
    if (r.ok) {
      std::snprintf(line, sizeof(line),
                    "%-30s  %s   %s   %s    %s  %6.2f %6.2f %6.2f\n",
                    r.name.c_str(), mark(r.ablation.bfu),
                    mark(r.ablation.dpe), mark(r.ablation.cl),
                    mark(r.ablation.sga), r.report.mean_dsc,
                    r.report.mean_iou, r.report.mean_assd);
    } else {
      std::snprintf(line, sizeof(line),
                    "%-30s  %s   %s   %s    %s  failed: %s\n", r.name.c_str(),
                    mark(r.ablation.bfu), mark(r.ablation.dpe),
                    mark(r.ablation.cl), mark(r.ablation.sga),
                    r.error.c_str());
    }
    out += line;
  }
  return out;
}

}  // namespace landnet::harness
