#ifndef LANDNET_HARNESS_CONFIG_HPP
#define LANDNET_HARNESS_CONFIG_HPP

#include <array>
#include <filesystem>
#include <string>

#include "landnet/data/types.hpp"
#include "landnet/model/config.hpp"

namespace landnet::harness {

/// Full training-run configuration. The `scale` preset picks the depth
/// encoder dimensions and input resolution; individual keys can still be
/// overridden afterwards (file first, then command line).
struct TrainConfig {
  std::string scale = "toy";  // toy | paper
  int resolution = 256;
  int epochs = 60;
  int batch_size = 4;
  double lr = 1e-4;
  double weight_decay = 3e-5;
  double lr_floor = 1e-6;
  double tau = 0.07;
  std::array<double, 3> lambdas = {1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  model::Ablation ablation;
  std::string rgb_backbone = "residual";
  std::string depth_backbone = "attention";

  // dataset: a directory in the on-disk layout, or (when empty) in-memory
  // synthetic frames split synth_train/synth_val/synth_test
  std::string data_root;
  std::uint64_t synth_seed = 1;
  int synth_train = 200;
  int synth_val = 40;
  int synth_test = 20;
  int synth_thickness = 9;
  double synth_deformation = 1.0;
  std::string depth_provider = "proxy";  // proxy | none (files required)

  bool augment = true;
  double grad_clip = 0.0;
  int common_width = 256;
  int vit_blocks = 4;
  int vit_dim = 192;
  int se_reduction = 8;
  double mask_pool_threshold = 0.5;
  bool dpe_softmax_space = false;
  bool cl_raw_dot = false;
  std::string pretrained_depth_weights;

  std::string run_dir = "runs/latest";
  int log_every = 1;
  int val_every = 1;  // epochs between validation evaluations
  int max_steps = 0;  // 0: epoch-driven; otherwise hard cap on steps

  /// Resolve the scale preset into the dependent fields.
  void apply_scale_preset();
  void validate() const;

  model::ModelConfig model_config() const;
  data::SynthConfig synth_config() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);

  /// key=value configuration text, '#' comments, nesting by dots
  /// (e.g. "ablation.bfu=false", "lambda.cl=0.5").
  void apply_kv(const std::string& key, const std::string& value);
  static TrainConfig from_file(const std::filesystem::path& path);
};

}  // namespace landnet::harness

#endif  // LANDNET_HARNESS_CONFIG_HPP
