// Command-line front end: dataset generation, training, evaluation,
// ablation sweeps and prediction. Exit codes: 0 success, 2 configuration
// error, 3 data error, 4 numeric failure.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>

#include "landnet/data/io.hpp"
#include "landnet/harness/evaluator.hpp"
#include "landnet/harness/predict.hpp"
#include "landnet/harness/trainer.hpp"

using namespace landnet;
using harness::TrainConfig;

namespace {

struct KvOverride {
  std::string key, value;
};

/// Shared trainer options: a config file, common dedicated flags, and
/// generic --set key=value overrides (applied last, in order).
struct TrainCliOptions {
  std::string config_file;
  std::vector<std::string> sets;
};

void add_train_options(CLI::App* cmd, TrainCliOptions* opts,
                       std::vector<KvOverride>* kvs) {
  cmd->add_option("--config", opts->config_file,
                  "key=value configuration file (dotted keys)");
  auto direct = [cmd, kvs](const std::string& flag, const std::string& key,
                           const std::string& help) {
    auto* opt = cmd->add_option_function<std::string>(
        flag,
        [kvs, key](const std::string& v) { kvs->push_back({key, v}); },
        help);
    opt->expected(1);
  };
  direct("--scale", "scale", "scale preset: toy | paper");
  direct("--resolution", "resolution", "input resolution (square)");
  direct("--epochs", "epochs", "training epochs");
  direct("--batch-size", "batch_size", "frames per optimizer step");
  direct("--lr", "lr", "initial learning rate");
  direct("--weight-decay", "weight_decay", "L2 weight decay factor");
  direct("--lr-floor", "lr_floor", "final learning rate of the schedule");
  direct("--tau", "tau", "contrastive temperature");
  direct("--seed", "seed", "run seed");
  direct("--data-root", "data.root", "dataset directory (omit for synthetic)");
  direct("--run-dir", "run_dir", "output directory for logs and checkpoints");
  direct("--max-steps", "max_steps", "hard cap on optimizer steps (0 = off)");
  direct("--augment", "augment", "geometric augmentation on/off");
  direct("--val-every", "val_every", "epochs between validation passes");
  cmd->add_option("--set", opts->sets,
                  "override any config key, e.g. --set ablation.bfu=false");
}

TrainConfig resolve_config(const TrainCliOptions& opts,
                           const std::vector<KvOverride>& kvs) {
  TrainConfig cfg;
  if (!opts.config_file.empty()) cfg = TrainConfig::from_file(opts.config_file);
  for (const auto& kv : kvs) cfg.apply_kv(kv.key, kv.value);
  for (const auto& kv : opts.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.apply_kv(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laparoscopic liver landmark detection"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth",
                                 "emit a synthetic dataset in the on-disk "
                                 "directory layout");
  std::string gen_out = "synth_data";
  data::SynthConfig gen_cfg;
  int gen_train = 200, gen_val = 40, gen_test = 20, gen_fpp = 4;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_cfg.seed, "generator seed");
  gen->add_option("--resolution", gen_cfg.resolution, "frame resolution");
  gen->add_option("--thickness", gen_cfg.curve_thickness_px,
                  "landmark curve thickness in pixels");
  gen->add_option("--deformation", gen_cfg.deformation_amplitude,
                  "boundary deformation amplitude");
  gen->add_option("--train", gen_train, "training frames");
  gen->add_option("--val", gen_val, "validation frames");
  gen->add_option("--test", gen_test, "test frames");
  gen->add_option("--frames-per-patient", gen_fpp,
                  "synthetic patient block size");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  TrainCliOptions train_opts;
  std::vector<KvOverride> train_kvs;
  add_train_options(train, &train_opts, &train_kvs);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  harness::EvalRequest eval_req;
  std::string eval_ckpt, eval_out, eval_data;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint directory")
      ->required();
  eval->add_option("--split", eval_req.split, "train | val | test");
  eval->add_option("--data-root", eval_data,
                   "override the dataset recorded in the checkpoint");
  eval->add_option("--out", eval_out, "directory for metric reports");
  eval->add_option("--threshold", eval_req.threshold,
                   "probability binarization threshold");
  eval->add_option("--expect-arch-hash", eval_req.expect_arch_hash,
                   "fail unless the checkpoint matches this architecture");

  // ablate
  auto* ablate = app.add_subcommand(
      "ablate", "train and evaluate an ablation grid under one seed");
  TrainCliOptions ablate_opts;
  std::vector<KvOverride> ablate_kvs;
  std::string grid = "designs";
  std::string ablate_split = "val";
  add_train_options(ablate, &ablate_opts, &ablate_kvs);
  ablate->add_option("--grid", grid,
                     "designs (key-design toggles) | backbones");
  ablate->add_option("--eval-split", ablate_split, "split used for the table");

  // predict
  auto* predict = app.add_subcommand("predict",
                                     "run inference and write probability "
                                     "maps and overlays");
  harness::PredictRequest pred_req;
  std::string pred_ckpt, pred_images, pred_out;
  predict->add_option("--checkpoint", pred_ckpt, "checkpoint directory")
      ->required();
  predict->add_option("--images", pred_images, "input image directory")
      ->required();
  predict->add_option("--out", pred_out, "output directory")->required();
  predict->add_option("--depth-dir", pred_req.depth_dir,
                      "precomputed depth maps (by image stem)");
  predict->add_option("--threshold", pred_req.threshold,
                      "overlay binarization threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gen_cfg.count = gen_train + gen_val + gen_test;
      const auto manifest = data::write_synthetic_dataset(
          gen_out, gen_cfg, gen_train, gen_val, gen_test, gen_fpp);
      std::printf("wrote %zu frames under %s\n", manifest.entries.size(),
                  gen_out.c_str());
    } else if (train->parsed()) {
      TrainConfig cfg = resolve_config(train_opts, train_kvs);
      harness::Trainer trainer(std::move(cfg));
      const auto result = trainer.run();
      std::printf("done: %d steps, best val DSC %.2f\n", result.steps,
                  result.best_val_dsc);
      std::printf("last checkpoint: %s\n",
                  result.last_checkpoint.string().c_str());
      if (!result.best_checkpoint.empty())
        std::printf("best checkpoint: %s\n",
                    result.best_checkpoint.string().c_str());
    } else if (eval->parsed()) {
      eval_req.checkpoint = eval_ckpt;
      eval_req.data_root_override = eval_data;
      eval_req.out_dir = eval_out;
      const auto report = harness::evaluate_checkpoint(eval_req);
      std::printf("%s", report.to_table().c_str());
    } else if (ablate->parsed()) {
      TrainConfig cfg = resolve_config(ablate_opts, ablate_kvs);
      auto rows = harness::run_ablation(cfg, harness::ablation_grid(grid),
                                        ablate_split);
      const std::string table = harness::ablation_table(rows);
      std::printf("%s", table.c_str());
      std::filesystem::create_directories(cfg.run_dir);
      std::ofstream out(std::filesystem::path(cfg.run_dir) /
                        ("ablation_" + grid + ".txt"));
      out << table;
    } else if (predict->parsed()) {
      pred_req.checkpoint = pred_ckpt;
      pred_req.images_dir = pred_images;
      pred_req.out_dir = pred_out;
      const int n = harness::run_predict(pred_req);
      std::printf("wrote predictions for %d images to %s\n", n,
                  pred_out.c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
