#ifndef LANDNET_MODEL_CONFIG_HPP
#define LANDNET_MODEL_CONFIG_HPP

#include <json.hpp>
#include <string>

#include "landnet/core/common.hpp"

namespace landnet::model {

enum class BackboneKind { residual, attention };

inline const char* to_string(BackboneKind k) {
  return k == BackboneKind::residual ? "residual" : "attention";
}

inline BackboneKind backbone_from_string(const std::string& s) {
  if (s == "residual" || s == "cnn" || s == "resnet")
    return BackboneKind::residual;
  if (s == "attention" || s == "sam" || s == "vit")
    return BackboneKind::attention;
  throw ConfigError("unknown backbone kind: " + s);
}

/// Component switches matching the key-design ablation rows: bi-modal
/// fusion, prompt embedding, contrastive loss, semantic geometric
/// augmentation. All off reduces the model to plain concat fusion.
struct Ablation {
  bool bfu = true;
  bool dpe = true;
  bool cl = true;
  bool sga = true;
};

struct ModelConfig {
  int resolution = 256;
  int common_width = 256;  // shared channel width C at stride 16
  int patch = 16;
  int vit_blocks = 4;      // toy default; paper preset uses 12
  int vit_dim = 192;       // toy default; paper preset uses 768
  int mlp_ratio = 4;
  int se_reduction = 8;    // 16 at paper scale
  int gn_groups = 8;
  bool dpe_softmax_space = false;  // spatial softmax attention instead of sigmoid
  bool cl_raw_dot = false;         // raw dot-product similarity instead of cosine
  double tau = 0.07;
  double mask_pool_threshold = 0.5;
  Ablation ablation;
  BackboneKind rgb_backbone = BackboneKind::residual;
  BackboneKind depth_backbone = BackboneKind::attention;
  std::uint64_t seed = 0;
  std::string pretrained_depth_weights;  // optional checkpoint dir

  int grid() const { return resolution / patch; }

  void validate() const {
    if (resolution <= 0 || resolution % patch != 0)
      throw ConfigError("model: resolution must be a positive multiple of " +
                        std::to_string(patch));
    if (resolution % 16 != 0)
      throw ConfigError("model: resolution must be divisible by 16");
    if (common_width < se_reduction)
      throw ConfigError("model: common_width smaller than SE reduction");
    if (common_width % gn_groups != 0)
      throw ConfigError("model: common_width must be divisible by gn_groups");
    if (vit_dim % 64 != 0)
      throw ConfigError("model: vit_dim must be a multiple of 64 (head size)");
    if (tau <= 0) throw ConfigError("model: tau must be > 0");
  }

  nlohmann::json to_json() const {
    return {{"resolution", resolution},
            {"common_width", common_width},
            {"patch", patch},
            {"vit_blocks", vit_blocks},
            {"vit_dim", vit_dim},
            {"mlp_ratio", mlp_ratio},
            {"se_reduction", se_reduction},
            {"gn_groups", gn_groups},
            {"dpe_softmax_space", dpe_softmax_space},
            {"cl_raw_dot", cl_raw_dot},
            {"tau", tau},
            {"mask_pool_threshold", mask_pool_threshold},
            {"ablation",
             {{"bfu", ablation.bfu},
              {"dpe", ablation.dpe},
              {"cl", ablation.cl},
              {"sga", ablation.sga}}},
            {"rgb_backbone", to_string(rgb_backbone)},
            {"depth_backbone", to_string(depth_backbone)},
            {"seed", seed}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.resolution = j.at("resolution");
    c.common_width = j.at("common_width");
    c.patch = j.at("patch");
    c.vit_blocks = j.at("vit_blocks");
    c.vit_dim = j.at("vit_dim");
    c.mlp_ratio = j.at("mlp_ratio");
    c.se_reduction = j.at("se_reduction");
    c.gn_groups = j.at("gn_groups");
    c.dpe_softmax_space = j.at("dpe_softmax_space");
    c.cl_raw_dot = j.at("cl_raw_dot");
    c.tau = j.at("tau");
    c.mask_pool_threshold = j.at("mask_pool_threshold");
    c.ablation.bfu = j.at("ablation").at("bfu");
    c.ablation.dpe = j.at("ablation").at("dpe");
    c.ablation.cl = j.at("ablation").at("cl");
    c.ablation.sga = j.at("ablation").at("sga");
    c.rgb_backbone = backbone_from_string(j.at("rgb_backbone"));
    c.depth_backbone = backbone_from_string(j.at("depth_backbone"));
    c.seed = j.at("seed");
    return c;
  }

  /// Stable hash over the architecture-affecting fields; checkpoints store
  /// it so incompatible evaluations fail early.
  std::string arch_hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }
};

}  // namespace landnet::model

#endif  // LANDNET_MODEL_CONFIG_HPP
