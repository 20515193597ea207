#ifndef LANDNET_MODEL_FUSION_HPP
#define LANDNET_MODEL_FUSION_HPP

#include <array>

#include "landnet/core/nn.hpp"
#include "landnet/core/ops_loss.hpp"
#include "landnet/model/config.hpp"

namespace landnet::model {

/// Largest divisor of `channels` not exceeding the preferred group count,
/// so narrow decoder stages still get a valid group normalization.
inline int pick_groups(int channels, int preferred) {
  int g = std::min(channels, preferred);
  while (g > 1 && channels % g != 0) --g;
  return g;
}

/// Bi-modal feature unification: SE-gated sum of the two streams, widened
/// by local (3x3) and global average-pooling branches, then fused back to
/// the common width.
template <typename T>
class BfuModule {
 public:
  BfuModule() = default;
  BfuModule(const ModelConfig& cfg, Rng& rng)
      : se_rgb_(cfg.common_width, cfg.se_reduction, rng),
        se_depth_(cfg.common_width, cfg.se_reduction, rng),
        proj_(3 * cfg.common_width, cfg.common_width, 1, 1, 0, rng),
        norm_(pick_groups(cfg.common_width, cfg.gn_groups), cfg.common_width) {
  }

  Tensor<T> forward(const Tensor<T>& f_rgb, const Tensor<T>& f_d) const {
    check_shape(f_rgb.shape() == f_d.shape(),
                "bfu: rgb and depth features must share [N,C,S,S]");
    auto merged = ops::add(se_rgb_.forward(f_rgb), se_depth_.forward(f_d));
    auto local = ops::avgpool3x3_s1(merged);
    auto global = ops::broadcast_spatial(ops::global_avgpool(merged),
                                         merged.dim(2));
    auto fused =
        proj_.forward(ops::concat_channels<T>({merged, local, global}));
    return ops::relu(norm_.forward(fused));
  }

  void collect(nn::ParamList<T>& out, const std::string& p) {
    se_rgb_.collect(out, p + ".se_rgb");
    se_depth_.collect(out, p + ".se_depth");
    proj_.collect(out, p + ".proj");
    norm_.collect(out, p + ".norm");
  }

 private:
  nn::SEBlock<T> se_rgb_, se_depth_;
  nn::Conv2d<T> proj_;
  nn::GroupNorm<T> norm_;
};

/// Fusion fallback with the unification module ablated: channel concat and
/// a 1x1 projection.
template <typename T>
class ConcatFuse {
 public:
  ConcatFuse() = default;
  ConcatFuse(const ModelConfig& cfg, Rng& rng)
      : proj_(2 * cfg.common_width, cfg.common_width, 1, 1, 0, rng),
        norm_(pick_groups(cfg.common_width, cfg.gn_groups), cfg.common_width) {
  }

  Tensor<T> forward(const Tensor<T>& f_rgb, const Tensor<T>& f_d) const {
    return ops::relu(
        norm_.forward(proj_.forward(ops::concat_channels<T>({f_rgb, f_d}))));
  }

  void collect(nn::ParamList<T>& out, const std::string& p) {
    proj_.collect(out, p + ".proj");
    norm_.collect(out, p + ".norm");
  }

 private:
  nn::Conv2d<T> proj_;
  nn::GroupNorm<T> norm_;
};

/// Semantic-specific geometric augmentation with reverse anatomic
/// attention. Each class-activated feature is fused with F_f, the three
/// results merge into F_a; reversed sigmoid weights of the anatomic logits
/// re-inject fused features where the anatomic response is low.
template <typename T>
class SgaModule {
 public:
  struct Out {
    Tensor<T> f_a;              // [N,C,S,S]
    Tensor<T> anatomic_logits;  // [N,1,S,S]
    Tensor<T> f_ana;            // reverse-weighted fused features
    Tensor<T> decoder_input;    // f_a + f_ana
  };

  SgaModule() = default;
  SgaModule(const ModelConfig& cfg, Rng& rng) {
    const int c = cfg.common_width;
    const int g = pick_groups(c, cfg.gn_groups);
    for (auto& blk : per_class_)
      blk = nn::ConvGnRelu<T>(2 * c, c, 3, rng, g);
    merge_ = nn::Conv2d<T>(3 * c, c, 1, 1, 0, rng);
    ana_logits_ = nn::Conv2d<T>(c, 1, 1, 1, 0, rng);
  }

  Out forward(const std::array<Tensor<T>, 3>& f_g,
              const Tensor<T>& f_f) const {
    std::vector<Tensor<T>> fa;
    fa.reserve(3);
    for (int c = 0; c < 3; ++c) {
      check_shape(f_g[c].shape() == f_f.shape(),
                  "sga: class feature and fused feature shapes differ");
      fa.push_back(
          per_class_[c].forward(ops::concat_channels<T>({f_g[c], f_f})));
    }
    Out out;
    out.f_a = merge_.forward(ops::concat_channels<T>(fa));
    out.anatomic_logits = ana_logits_.forward(out.f_a);
    auto rho = ops::rsub_scalar(T(1), ops::sigmoid(out.anatomic_logits));
    out.f_ana = ops::scale_spatial(f_f, rho);
    out.decoder_input = ops::add(out.f_a, out.f_ana);
    return out;
  }

  void collect(nn::ParamList<T>& out, const std::string& p) {
    static constexpr std::array<const char*, 3> cls = {"silhouette",
                                                       "ligament", "ridge"};
    for (int c = 0; c < 3; ++c)
      per_class_[c].collect(out, p + "." + cls[c]);
    merge_.collect(out, p + ".merge");
    ana_logits_.collect(out, p + ".anatomic_logits");
  }

 private:
  std::array<nn::ConvGnRelu<T>, 3> per_class_;
  nn::Conv2d<T> merge_;
  nn::Conv2d<T> ana_logits_;
};

/// Anatomic probability head: 1x1 conv to one channel, bilinear upsample to
/// the input resolution, sigmoid. Supervised against the union of the
/// landmark masks.
template <typename T>
class AnatomicHead {
 public:
  AnatomicHead() = default;
  AnatomicHead(const ModelConfig& cfg, Rng& rng)
      : conv_(cfg.common_width, 1, 1, 1, 0, rng) {}

  Tensor<T> forward(const Tensor<T>& anatomic_feature, int out_res) const {
    auto logits = conv_.forward(anatomic_feature);
    return ops::sigmoid(ops::upsample_bilinear(logits, out_res, out_res));
  }

  void collect(nn::ParamList<T>& out, const std::string& p) {
    conv_.collect(out, p + ".conv");
  }

 private:
  nn::Conv2d<T> conv_;
};

}  // namespace landnet::model

#endif  // LANDNET_MODEL_FUSION_HPP
