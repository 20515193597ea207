#ifndef LANDNET_MODEL_NETWORK_HPP
#define LANDNET_MODEL_NETWORK_HPP

#include "landnet/core/serialize.hpp"
#include "landnet/data/types.hpp"
#include "landnet/model/decoder.hpp"
#include "landnet/model/encoders.hpp"
#include "landnet/model/fusion.hpp"
#include "landnet/model/losses.hpp"
#include "landnet/model/prompts.hpp"

namespace landnet::model {

/// Batched input views of a set of frames.
template <typename T>
struct Batch {
  Tensor<T> rgb;    // [N,3,H,W]
  Tensor<T> depth;  // [N,1,H,W]
  std::vector<T> masks;  // [N,3,H,W] flat, constant targets
  std::vector<std::array<bool, 3>> present;
  std::vector<std::string> frame_ids;
  int h = 0, w = 0;
};

template <typename T>
Batch<T> make_batch(const std::vector<data::FrameSample>& frames) {
  check_shape(!frames.empty(), "make_batch: empty frame list");
  Batch<T> b;
  b.h = frames[0].h;
  b.w = frames[0].w;
  const int n = static_cast<int>(frames.size());
  const std::size_t plane = frames[0].plane();
  b.rgb = Tensor<T>::zeros({n, 3, b.h, b.w});
  b.depth = Tensor<T>::zeros({n, 1, b.h, b.w});
  b.masks.resize(static_cast<size_t>(n) * 3 * plane);
  for (int i = 0; i < n; ++i) {
    const auto& f = frames[i];
    check_shape(f.h == b.h && f.w == b.w,
                "make_batch: frames differ in resolution");
    for (std::size_t j = 0; j < 3 * plane; ++j) {
      b.rgb.data()[i * 3 * plane + j] = static_cast<T>(f.rgb[j]);
      b.masks[i * 3 * plane + j] = static_cast<T>(f.masks[j]);
    }
    for (std::size_t j = 0; j < plane; ++j)
      b.depth.data()[i * plane + j] = static_cast<T>(f.depth[j]);
    b.present.push_back(f.present);
    b.frame_ids.push_back(f.frame_id);
  }
  return b;
}

/// The full landmark-detection network: dual encoders, prompt-driven
/// geometric activation, cross-modal fusion with reverse anatomic
/// attention, and a skip-connected decoder. All components sit behind
/// ablation switches and every variant keeps identical output shapes.
template <typename T>
class LandmarkModel {
 public:
  struct Forward {
    Tensor<T> logits;         // [N,3,H,W]
    Tensor<T> probs;          // sigmoid(logits)
    Tensor<T> anatomic_prob;  // [N,1,H,W]; defined iff sga enabled
    Tensor<T> attention;      // [N,3,S,S]; defined iff dpe enabled
    Tensor<T> f_d;            // depth features [N,C,S,S]
    Tensor<T> f_f;            // fused features [N,C,S,S]
  };

  struct LossReport {
    Tensor<T> total;  // scalar on the graph
    double seg = 0, cl = 0, ana = 0;
    std::array<double, 3> class_dice{};
    std::array<double, 3> class_bce{};
    std::array<double, 3> lambdas{1, 1, 1};
    bool cl_skipped = false;

    nlohmann::json to_json() const {
      return {{"total", total.item()},  {"seg", seg},
              {"cl", cl},               {"ana", ana},
              {"per_class_dice", class_dice},
              {"per_class_bce", class_bce},
              {"lambdas", lambdas},     {"cl_skipped", cl_skipped}};
    }
  };

  explicit LandmarkModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng = Rng::derive(cfg_.seed, 0xA11);
    rgb_ = RgbStream<T>(cfg_, rng);
    depth_ = DepthStream<T>(cfg_, rng);
    prompts_ = PromptModule<T>(cfg_, rng);
    if (cfg_.ablation.bfu)
      bfu_ = BfuModule<T>(cfg_, rng);
    else
      concat_fuse_ = ConcatFuse<T>(cfg_, rng);
    if (cfg_.ablation.sga) {
      sga_ = SgaModule<T>(cfg_, rng);
      anatomic_ = AnatomicHead<T>(cfg_, rng);
    }
    decoder_ = Decoder<T>(cfg_, rng);
    if (!cfg_.pretrained_depth_weights.empty()) load_depth_trunk();
  }

  Forward forward(const Tensor<T>& rgb, const Tensor<T>& depth) const {
    check_shape(rgb.ndim() == 4 && rgb.dim(1) == 3 &&
                    rgb.dim(2) == cfg_.resolution &&
                    rgb.dim(3) == cfg_.resolution,
                "model: rgb input must be [N,3," +
                    std::to_string(cfg_.resolution) + "," +
                    std::to_string(cfg_.resolution) + "]");
    check_shape(depth.ndim() == 4 && depth.dim(1) == 1 &&
                    depth.dim(2) == cfg_.resolution &&
                    depth.dim(3) == cfg_.resolution,
                "model: depth input must be [N,1,R,R]");
    Forward out;
    auto rgb_feats = rgb_.forward(rgb);
    out.f_d = depth_.forward(depth);
    out.f_f = cfg_.ablation.bfu
                  ? bfu_.forward(rgb_feats.f16, out.f_d)
                  : concat_fuse_.forward(rgb_feats.f16, out.f_d);

    std::array<Tensor<T>, 3> f_g;
    if (cfg_.ablation.dpe) {
      auto activated = prompts_.prompt_attention(out.f_d);
      out.attention = activated.attention;
      f_g = activated.f_g;
    } else {
      f_g = {out.f_d, out.f_d, out.f_d};
    }

    Tensor<T> decoder_input;
    if (cfg_.ablation.sga) {
      auto sga = sga_.forward(f_g, out.f_f);
      decoder_input = sga.decoder_input;
      out.anatomic_prob = anatomic_.forward(sga.f_ana, cfg_.resolution);
    } else {
      decoder_input = out.f_f;
    }

    auto dec = decoder_.forward(decoder_input, rgb_feats.skip8,
                                rgb_feats.skip4, cfg_.resolution);
    out.logits = dec.logits;
    out.probs = dec.probs;
    return out;
  }

  /// Composite objective over a batch: segmentation (dice+bce per class),
  /// prompt contrastive term (if enabled), anatomic dice on the landmark
  /// union (if the augmentation scheme is enabled).
  LossReport compute_loss(const Forward& fwd, const Batch<T>& batch,
                          const std::array<double, 3>& lambdas) const {
    LossReport report;
    report.lambdas = lambdas;

    auto seg = segmentation_loss(fwd.logits, fwd.probs, batch.masks);
    report.seg = static_cast<double>(seg.loss.item());
    const int n = fwd.logits.dim(0);
    for (int c = 0; c < 3; ++c) {
      double dsum = 0, bsum = 0;
      for (int i = 0; i < n; ++i) {
        dsum += static_cast<double>(seg.dice_nc.data()[i * 3 + c]);
        bsum += static_cast<double>(seg.bce_nc.data()[i * 3 + c]);
      }
      report.class_dice[c] = dsum / n;
      report.class_bce[c] = bsum / n;
    }

    Tensor<T> cl = Tensor<T>::scalar(T(0));
    report.cl_skipped = true;
    if (cfg_.ablation.cl && cfg_.ablation.dpe) {
      auto refs = prompts_.reference_embeddings(fwd.f_d, to_float(batch.masks),
                                                batch.h, batch.w,
                                                batch.present);
      bool skipped = false;
      cl = prompts_.contrastive_loss(refs, &skipped);
      report.cl_skipped = skipped;
    }
    report.cl = static_cast<double>(cl.item());

    Tensor<T> ana = Tensor<T>::scalar(T(0));
    if (cfg_.ablation.sga) {
      const std::size_t plane = static_cast<std::size_t>(batch.h) * batch.w;
      std::vector<T> uni(static_cast<size_t>(n) * plane, T(0));
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c)
          for (std::size_t j = 0; j < plane; ++j)
            uni[i * plane + j] = std::max(
                uni[i * plane + j], batch.masks[(i * 3 + c) * plane + j]);
      ana = ops::mean_all(dice_per_channel(fwd.anatomic_prob, uni));
    }
    report.ana = static_cast<double>(ana.item());

    report.total = total_loss(seg.loss, cl, ana, lambdas);
    return report;
  }

  nn::ParamList<T> parameters() {
    nn::ParamList<T> out;
    rgb_.collect(out, "rgb");
    depth_.collect(out, "depth");
    if (cfg_.ablation.dpe) prompts_.collect(out, "prompt");
    if (cfg_.ablation.bfu)
      bfu_.collect(out, "fusion.bfu");
    else
      concat_fuse_.collect(out, "fusion.concat");
    if (cfg_.ablation.sga) {
      sga_.collect(out, "sga");
      anatomic_.collect(out, "anatomic");
    }
    decoder_.collect(out, "decoder");
    return out;
  }

  void set_training(bool t) {
    rgb_.set_training(t);
    depth_.set_training(t);
  }

  const ModelConfig& config() const { return cfg_; }
  PromptModule<T>& prompt_module() { return prompts_; }

 private:
  static std::vector<float> to_float(const std::vector<T>& v) {
    if constexpr (std::is_same_v<T, float>) {
      return v;
    } else {
      return std::vector<float>(v.begin(), v.end());
    }
  }

  void load_depth_trunk() {
    nn::ParamList<T> all;
    depth_.collect(all, "depth");
    nn::ParamList<T> trunk;
    for (auto& p : all)
      if (p.name.rfind("depth.vit.", 0) == 0) trunk.push_back(p);
    if (trunk.empty())
      throw ConfigError(
          "pretrained depth weights given but the depth backbone has no "
          "attention trunk");
    load_checkpoint<T>(cfg_.pretrained_depth_weights, trunk);
  }

  ModelConfig cfg_;
  RgbStream<T> rgb_;
  DepthStream<T> depth_;
  PromptModule<T> prompts_;
  BfuModule<T> bfu_;
  ConcatFuse<T> concat_fuse_;
  SgaModule<T> sga_;
  AnatomicHead<T> anatomic_;
  Decoder<T> decoder_;
};

}  // namespace landnet::model

#endif  // LANDNET_MODEL_NETWORK_HPP
