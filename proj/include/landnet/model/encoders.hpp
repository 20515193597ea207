#ifndef LANDNET_MODEL_ENCODERS_HPP
#define LANDNET_MODEL_ENCODERS_HPP

#include <array>
#include <memory>

#include "landnet/core/nn.hpp"
#include "landnet/core/ops_loss.hpp"
#include "landnet/model/config.hpp"

namespace landnet::model {

using nn::ParamList;

/// Basic residual block (two 3x3 convs with batch norm, optional strided
/// projection shortcut).
template <typename T>
class BasicBlock {
 public:
  BasicBlock() = default;
  BasicBlock(int cin, int cout, int stride, Rng& rng)
      : conv1_(cin, cout, 3, stride, 1, rng),
        bn1_(cout),
        conv2_(cout, cout, 3, 1, 1, rng),
        bn2_(cout),
        has_down_(stride != 1 || cin != cout) {
    if (has_down_) {
      down_conv_ = nn::Conv2d<T>(cin, cout, 1, stride, 0, rng);
      down_bn_ = nn::BatchNorm2d<T>(cout);
    }
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    auto y = ops::relu(bn1_.forward(conv1_.forward(x)));
    y = bn2_.forward(conv2_.forward(y));
    const Tensor<T> identity =
        has_down_ ? down_bn_.forward(down_conv_.forward(x)) : x;
    return ops::relu(ops::add(y, identity));
  }

  void set_training(bool t) {
    bn1_.set_training(t);
    bn2_.set_training(t);
    if (has_down_) down_bn_.set_training(t);
  }

  void collect(ParamList<T>& out, const std::string& p, bool frozen) {
    conv1_.collect(out, p + ".conv1", frozen);
    bn1_.collect(out, p + ".bn1", frozen);
    conv2_.collect(out, p + ".conv2", frozen);
    bn2_.collect(out, p + ".bn2", frozen);
    if (has_down_) {
      down_conv_.collect(out, p + ".down.conv", frozen);
      down_bn_.collect(out, p + ".down.bn", frozen);
    }
  }

 private:
  nn::Conv2d<T> conv1_, conv2_, down_conv_;
  nn::BatchNorm2d<T> bn1_, bn2_, down_bn_;
  bool has_down_ = false;
};

/// 34-layer-family residual encoder, built through its stride-16 stage
/// (stem + 3/4/6 basic blocks at widths 64/128/256). The stride-32 stage of
/// the full classification network has no consumer here and is omitted.
template <typename T>
class ResNetEncoder {
 public:
  struct Features {
    Tensor<T> c2;  // [N, 64, H/4, W/4]
    Tensor<T> c3;  // [N, 128, H/8, W/8]
    Tensor<T> c4;  // [N, 256, H/16, W/16]
  };

  ResNetEncoder() = default;
  explicit ResNetEncoder(Rng& rng)
      : stem_(3, 64, 7, 2, 3, rng), stem_bn_(64) {
    auto make_stage = [&](std::vector<BasicBlock<T>>& stage, int cin,
                          int cout, int blocks, int stride) {
      stage.emplace_back(cin, cout, stride, rng);
      for (int i = 1; i < blocks; ++i) stage.emplace_back(cout, cout, 1, rng);
    };
    make_stage(layer1_, 64, 64, 3, 1);
    make_stage(layer2_, 64, 128, 4, 2);
    make_stage(layer3_, 128, 256, 6, 2);
  }

  Features forward(const Tensor<T>& x) const {
    check_shape(x.ndim() == 4 && x.dim(1) == 3 && x.dim(2) == x.dim(3),
                "rgb encoder expects square [N,3,H,W] input");
    auto y = ops::maxpool3x3_s2(ops::relu(stem_bn_.forward(stem_.forward(x))));
    for (const auto& b : layer1_) y = b.forward(y);
    Features f;
    f.c2 = y;
    for (const auto& b : layer2_) y = b.forward(y);
    f.c3 = y;
    for (const auto& b : layer3_) y = b.forward(y);
    f.c4 = y;
    return f;
  }

  void set_training(bool t) {
    stem_bn_.set_training(t);
    for (auto& b : layer1_) b.set_training(t);
    for (auto& b : layer2_) b.set_training(t);
    for (auto& b : layer3_) b.set_training(t);
  }

  void collect(ParamList<T>& out, const std::string& p, bool frozen = false) {
    stem_.collect(out, p + ".stem.conv", frozen);
    stem_bn_.collect(out, p + ".stem.bn", frozen);
    auto stage = [&](std::vector<BasicBlock<T>>& blocks, const std::string& n) {
      for (size_t i = 0; i < blocks.size(); ++i)
        blocks[i].collect(out, p + "." + n + "." + std::to_string(i), frozen);
    };
    stage(layer1_, "layer1");
    stage(layer2_, "layer2");
    stage(layer3_, "layer3");
  }

 private:
  nn::Conv2d<T> stem_;
  nn::BatchNorm2d<T> stem_bn_;
  std::vector<BasicBlock<T>> layer1_, layer2_, layer3_;
};

/// Frozen attention encoder over patch tokens (global self-attention,
/// pre-norm blocks, learned position embeddings, no class token). The
/// trunk is always frozen, so the forward pass runs as plain math outside
/// the autograd graph; adaptation happens in the trainable necks that
/// follow it.
template <typename T>
class AttentionEncoder {
 public:
  AttentionEncoder() = default;
  AttentionEncoder(int resolution, int patch, int dim, int blocks,
                   int mlp_ratio, Rng& rng)
      : patch_(patch),
        dim_(dim),
        blocks_(blocks),
        heads_(dim / 64),
        grid_(resolution / patch),
        mlp_hidden_(dim * mlp_ratio) {
    auto mk = [&](std::vector<int> shape, double stddev) {
      Tensor<T> t = Tensor<T>::zeros(std::move(shape));
      if (stddev > 0) nn::fill_normal(t, rng, stddev);
      return t;
    };
    const int tokens = grid_ * grid_;
    patch_w_ = mk({dim_, 3 * patch_ * patch_}, 0.02);
    patch_b_ = mk({dim_}, 0.0);
    pos_ = mk({tokens, dim_}, 0.02);
    blocks_params_.resize(blocks_);
    for (auto& b : blocks_params_) {
      b.ln1_g = Tensor<T>::full({dim_}, T(1));
      b.ln1_b = mk({dim_}, 0.0);
      b.qkv_w = mk({3 * dim_, dim_}, 0.02);
      b.qkv_b = mk({3 * dim_}, 0.0);
      b.proj_w = mk({dim_, dim_}, 0.02);
      b.proj_b = mk({dim_}, 0.0);
      b.ln2_g = Tensor<T>::full({dim_}, T(1));
      b.ln2_b = mk({dim_}, 0.0);
      b.fc1_w = mk({mlp_hidden_, dim_}, 0.02);
      b.fc1_b = mk({mlp_hidden_}, 0.0);
      b.fc2_w = mk({dim_, mlp_hidden_}, 0.02);
      b.fc2_b = mk({dim_}, 0.0);
    }
  }

  int dim() const { return dim_; }
  int grid() const { return grid_; }

  /// [N,3,H,W] -> constant [N,dim,S,S] token grid.
  Tensor<T> forward_grid(const Tensor<T>& x) const {
    check_shape(x.ndim() == 4 && x.dim(1) == 3 &&
                    x.dim(2) == grid_ * patch_ && x.dim(3) == grid_ * patch_,
                "attention encoder: input resolution does not match the "
                "configured token grid");
    const int n = x.dim(0);
    const int tokens = grid_ * grid_;
    const int pp3 = 3 * patch_ * patch_;
    Tensor<T> out = Tensor<T>::zeros({n, dim_, grid_, grid_});

    std::vector<T> col(static_cast<size_t>(pp3) * tokens);
    std::vector<T> tok(static_cast<size_t>(tokens) * dim_);
    std::vector<T> normed(tok.size());
    std::vector<T> qkv(static_cast<size_t>(tokens) * 3 * dim_);
    std::vector<T> scores(static_cast<size_t>(tokens) * tokens);
    std::vector<T> ctx(tok.size());
    std::vector<T> mlp(static_cast<size_t>(tokens) * mlp_hidden_);

    for (int s = 0; s < n; ++s) {
      ops::detail::im2col(x.data() + static_cast<std::int64_t>(s) * 3 *
                                         x.dim(2) * x.dim(3),
                          3, x.dim(2), x.dim(3), patch_, patch_, patch_, 0,
                          grid_, grid_, col.data());
      // tokens [T, D] = col^T * patch_w^T + bias + position
      gemm(true, true, tokens, dim_, pp3, T(1), col.data(), tokens,
           patch_w_.data(), pp3, T(0), tok.data(), dim_);
      for (int t = 0; t < tokens; ++t)
        for (int d = 0; d < dim_; ++d)
          tok[static_cast<size_t>(t) * dim_ + d] +=
              patch_b_.data()[d] + pos_.data()[static_cast<size_t>(t) * dim_ + d];

      for (const auto& b : blocks_params_) {
        layer_norm(tok.data(), normed.data(), tokens, b.ln1_g, b.ln1_b);
        gemm(false, true, tokens, 3 * dim_, dim_, T(1), normed.data(), dim_,
             b.qkv_w.data(), dim_, T(0), qkv.data(), 3 * dim_);
        for (int t = 0; t < tokens; ++t)
          for (int d = 0; d < 3 * dim_; ++d)
            qkv[static_cast<size_t>(t) * 3 * dim_ + d] += b.qkv_b.data()[d];

        const int dh = dim_ / heads_;
        const T scale = T(1) / std::sqrt(static_cast<T>(dh));
        for (int h = 0; h < heads_; ++h) {
          const T* q = qkv.data() + h * dh;
          const T* k = qkv.data() + dim_ + h * dh;
          const T* v = qkv.data() + 2 * dim_ + h * dh;
          gemm(false, true, tokens, tokens, dh, scale, q, 3 * dim_, k,
               3 * dim_, T(0), scores.data(), tokens);
          softmax_rows(scores.data(), tokens, tokens);
          gemm(false, false, tokens, dh, tokens, T(1), scores.data(), tokens,
               v, 3 * dim_, T(0), ctx.data() + h * dh, dim_);
        }
        // attention projection + residual
        gemm(false, true, tokens, dim_, dim_, T(1), ctx.data(), dim_,
             b.proj_w.data(), dim_, T(0), normed.data(), dim_);
        for (int t = 0; t < tokens; ++t)
          for (int d = 0; d < dim_; ++d)
            tok[static_cast<size_t>(t) * dim_ + d] +=
                normed[static_cast<size_t>(t) * dim_ + d] + b.proj_b.data()[d];

        // mlp + residual
        layer_norm(tok.data(), normed.data(), tokens, b.ln2_g, b.ln2_b);
        gemm(false, true, tokens, mlp_hidden_, dim_, T(1), normed.data(),
             dim_, b.fc1_w.data(), dim_, T(0), mlp.data(), mlp_hidden_);
        for (std::size_t i = 0; i < mlp.size(); ++i) {
          const T zv = mlp[i] + b.fc1_b.data()[i % mlp_hidden_];
          mlp[i] = static_cast<T>(
              0.5 * zv * (1.0 + std::erf(zv * 0.70710678118654752440)));
        }
        gemm(false, true, tokens, dim_, mlp_hidden_, T(1), mlp.data(),
             mlp_hidden_, b.fc2_w.data(), mlp_hidden_, T(0), normed.data(),
             dim_);
        for (int t = 0; t < tokens; ++t)
          for (int d = 0; d < dim_; ++d)
            tok[static_cast<size_t>(t) * dim_ + d] +=
                normed[static_cast<size_t>(t) * dim_ + d] + b.fc2_b.data()[d];
      }

      // [T,D] -> [D,S,S]
      T* dst = out.data() + static_cast<std::int64_t>(s) * dim_ * tokens;
      for (int t = 0; t < tokens; ++t)
        for (int d = 0; d < dim_; ++d)
          dst[static_cast<std::int64_t>(d) * tokens + t] =
              tok[static_cast<size_t>(t) * dim_ + d];
    }
    return out;
  }

  void collect(ParamList<T>& out, const std::string& p) {
    // the trunk is frozen by contract
    nn::add_param(out, p + ".patch.weight", patch_w_, true);
    nn::add_param(out, p + ".patch.bias", patch_b_, true);
    nn::add_param(out, p + ".pos", pos_, true);
    for (size_t i = 0; i < blocks_params_.size(); ++i) {
      const std::string bp = p + ".block" + std::to_string(i);
      auto& b = blocks_params_[i];
      nn::add_param(out, bp + ".ln1.gamma", b.ln1_g, true);
      nn::add_param(out, bp + ".ln1.beta", b.ln1_b, true);
      nn::add_param(out, bp + ".qkv.weight", b.qkv_w, true);
      nn::add_param(out, bp + ".qkv.bias", b.qkv_b, true);
      nn::add_param(out, bp + ".proj.weight", b.proj_w, true);
      nn::add_param(out, bp + ".proj.bias", b.proj_b, true);
      nn::add_param(out, bp + ".ln2.gamma", b.ln2_g, true);
      nn::add_param(out, bp + ".ln2.beta", b.ln2_b, true);
      nn::add_param(out, bp + ".fc1.weight", b.fc1_w, true);
      nn::add_param(out, bp + ".fc1.bias", b.fc1_b, true);
      nn::add_param(out, bp + ".fc2.weight", b.fc2_w, true);
      nn::add_param(out, bp + ".fc2.bias", b.fc2_b, true);
    }
  }

 private:
  struct BlockParams {
    Tensor<T> ln1_g, ln1_b, qkv_w, qkv_b, proj_w, proj_b;
    Tensor<T> ln2_g, ln2_b, fc1_w, fc1_b, fc2_w, fc2_b;
  };

  void layer_norm(const T* x, T* y, int rows, const Tensor<T>& g,
                  const Tensor<T>& b) const {
    constexpr T eps = T(1e-6);
    for (int r = 0; r < rows; ++r) {
      const T* xr = x + static_cast<size_t>(r) * dim_;
      T* yr = y + static_cast<size_t>(r) * dim_;
      T mean = T(0);
      for (int d = 0; d < dim_; ++d) mean += xr[d];
      mean /= dim_;
      T var = T(0);
      for (int d = 0; d < dim_; ++d) var += (xr[d] - mean) * (xr[d] - mean);
      var /= dim_;
      const T inv = T(1) / std::sqrt(var + eps);
      for (int d = 0; d < dim_; ++d)
        yr[d] = g.data()[d] * (xr[d] - mean) * inv + b.data()[d];
    }
  }

  static void softmax_rows(T* m, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
      T* row = m + static_cast<size_t>(r) * cols;
      T mx = row[0];
      for (int i = 1; i < cols; ++i) mx = std::max(mx, row[i]);
      T sum = T(0);
      for (int i = 0; i < cols; ++i) {
        row[i] = std::exp(row[i] - mx);
        sum += row[i];
      }
      const T inv = T(1) / sum;
      for (int i = 0; i < cols; ++i) row[i] *= inv;
    }
  }

  int patch_ = 16, dim_ = 192, blocks_ = 4, heads_ = 3, grid_ = 16,
      mlp_hidden_ = 768;
  Tensor<T> patch_w_, patch_b_, pos_;
  std::vector<BlockParams> blocks_params_;
};

/// Replicate a single-channel map to three channels (for feeding depth to
/// encoders that expect rgb-shaped input). Constant w.r.t. the graph: depth
/// inputs carry no gradient.
template <typename T>
Tensor<T> replicate3(const Tensor<T>& x1) {
  check_shape(x1.ndim() == 4 && x1.dim(1) == 1,
              "replicate3: expected [N,1,H,W]");
  return ops::concat_channels<T>({x1, x1, x1});
}

/// RGB stream: multi-level features with stride-4/8 skips and a stride-16
/// map projected to the common width.
template <typename T>
class RgbStream {
 public:
  struct Features {
    Tensor<T> skip4;  // [N,64,H/4,W/4]
    Tensor<T> skip8;  // [N,128,H/8,W/8]
    Tensor<T> f16;    // [N,C,H/16,W/16]
  };

  RgbStream() = default;
  RgbStream(const ModelConfig& cfg, Rng& rng) : kind_(cfg.rgb_backbone) {
    if (kind_ == BackboneKind::residual) {
      resnet_ = std::make_unique<ResNetEncoder<T>>(rng);
      neck_ = nn::Conv2d<T>(256, cfg.common_width, 1, 1, 0, rng);
    } else {
      vit_ = std::make_unique<AttentionEncoder<T>>(
          cfg.resolution, cfg.patch, cfg.vit_dim, cfg.vit_blocks,
          cfg.mlp_ratio, rng);
      neck_ = nn::Conv2d<T>(cfg.vit_dim, cfg.common_width, 1, 1, 0, rng);
      // a frozen token trunk has no pyramid, so the decoder skips are
      // synthesized from the neck output at the matching strides
      skip8_proj_ = nn::Conv2d<T>(cfg.common_width, 128, 1, 1, 0, rng);
      skip4_proj_ = nn::Conv2d<T>(cfg.common_width, 64, 1, 1, 0, rng);
    }
  }

  Features forward(const Tensor<T>& rgb) const {
    Features f;
    if (kind_ == BackboneKind::residual) {
      auto r = resnet_->forward(rgb);
      f.skip4 = r.c2;
      f.skip8 = r.c3;
      f.f16 = neck_.forward(r.c4);
    } else {
      Tensor<T> grid;
      {
        NoGradGuard ng;
        grid = vit_->forward_grid(rgb);
      }
      f.f16 = neck_.forward(grid);
      const int s = f.f16.dim(2);
      f.skip8 = skip8_proj_.forward(ops::upsample_bilinear(f.f16, 2 * s, 2 * s));
      f.skip4 = skip4_proj_.forward(ops::upsample_bilinear(f.f16, 4 * s, 4 * s));
    }
    return f;
  }

  void set_training(bool t) {
    if (resnet_) resnet_->set_training(t);
  }

  void collect(ParamList<T>& out, const std::string& p) {
    if (kind_ == BackboneKind::residual) {
      resnet_->collect(out, p + ".resnet");
    } else {
      vit_->collect(out, p + ".vit");
      skip8_proj_.collect(out, p + ".skip8_proj");
      skip4_proj_.collect(out, p + ".skip4_proj");
    }
    neck_.collect(out, p + ".neck");
  }

 private:
  BackboneKind kind_ = BackboneKind::residual;
  std::unique_ptr<ResNetEncoder<T>> resnet_;
  std::unique_ptr<AttentionEncoder<T>> vit_;
  nn::Conv2d<T> neck_, skip8_proj_, skip4_proj_;
};

/// Depth stream: global geometric features at stride 16, common width.
/// The attention variant keeps its trunk frozen (adaptation through the
/// trainable neck); the residual variant is fully trainable.
template <typename T>
class DepthStream {
 public:
  DepthStream() = default;
  DepthStream(const ModelConfig& cfg, Rng& rng) : kind_(cfg.depth_backbone) {
    if (kind_ == BackboneKind::attention) {
      vit_ = std::make_unique<AttentionEncoder<T>>(
          cfg.resolution, cfg.patch, cfg.vit_dim, cfg.vit_blocks,
          cfg.mlp_ratio, rng);
      neck_ = nn::Conv2d<T>(cfg.vit_dim, cfg.common_width, 1, 1, 0, rng);
    } else {
      resnet_ = std::make_unique<ResNetEncoder<T>>(rng);
      neck_ = nn::Conv2d<T>(256, cfg.common_width, 1, 1, 0, rng);
    }
  }

  Tensor<T> forward(const Tensor<T>& depth1) const {
    const Tensor<T> depth3 = replicate3(depth1);
    if (kind_ == BackboneKind::attention) {
      Tensor<T> grid;
      {
        NoGradGuard ng;
        grid = vit_->forward_grid(depth3);
      }
      return neck_.forward(grid);
    }
    return neck_.forward(resnet_->forward(depth3).c4);
  }

  AttentionEncoder<T>* attention_trunk() { return vit_.get(); }

  void set_training(bool t) {
    if (resnet_) resnet_->set_training(t);
  }

  void collect(ParamList<T>& out, const std::string& p) {
    if (kind_ == BackboneKind::attention)
      vit_->collect(out, p + ".vit");
    else
      resnet_->collect(out, p + ".resnet");
    neck_.collect(out, p + ".neck");
  }

 private:
  BackboneKind kind_ = BackboneKind::attention;
  std::unique_ptr<AttentionEncoder<T>> vit_;
  std::unique_ptr<ResNetEncoder<T>> resnet_;
  nn::Conv2d<T> neck_;
};

}  // namespace landnet::model

#endif  // LANDNET_MODEL_ENCODERS_HPP
