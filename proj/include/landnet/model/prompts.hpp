#ifndef LANDNET_MODEL_PROMPTS_HPP
#define LANDNET_MODEL_PROMPTS_HPP

#include <array>

#include "landnet/core/nn.hpp"
#include "landnet/core/ops_loss.hpp"
#include "landnet/model/config.hpp"

namespace landnet::model {

/// Pick one sample's [K,C] matrix out of an [N,K,C] tensor.
template <typename T>
Tensor<T> select_sample(const Tensor<T>& x, int n) {
  check_shape(x.ndim() == 3 && n >= 0 && n < x.dim(0),
              "select_sample: index out of range");
  const int k = x.dim(1), c = x.dim(2);
  const std::int64_t sz = static_cast<std::int64_t>(k) * c;
  Tensor<T> out = Tensor<T>::make(
      {k, c}, {x}, [n, sz](typename Tensor<T>::Node& o) {
        auto& px = *o.parents[0];
        if (!px.requires_grad) return;
        px.ensure_grad();
        for (std::int64_t i = 0; i < sz; ++i) px.g[n * sz + i] += o.g[i];
      });
  std::copy(x.data() + n * sz, x.data() + (n + 1) * sz, out.data());
  return out;
}

/// Area-downsample binary masks [N,3,H,W] to the feature grid [N,3,S,S] and
/// re-threshold. Plain data (the masks carry no gradient).
template <typename T>
std::vector<T> downsample_masks(const std::vector<float>& masks, int n, int h,
                                int w, int s, double threshold) {
  check_shape(h % s == 0 && w % s == 0,
              "mask downsample: resolution must be a multiple of the grid");
  const int ry = h / s, rx = w / s;
  std::vector<T> out(static_cast<size_t>(n) * 3 * s * s, T(0));
  for (int plane = 0; plane < n * 3; ++plane) {
    const float* src =
        masks.data() + static_cast<std::size_t>(plane) * h * w;
    T* dst = out.data() + static_cast<std::size_t>(plane) * s * s;
    for (int sy = 0; sy < s; ++sy)
      for (int sx = 0; sx < s; ++sx) {
        double acc = 0.0;
        for (int y = sy * ry; y < (sy + 1) * ry; ++y)
          for (int x = sx * rx; x < (sx + 1) * rx; ++x)
            acc += src[static_cast<std::size_t>(y) * w + x];
        const double frac = acc / (ry * rx);
        dst[sy * s + sx] = frac >= threshold ? T(1) : T(0);
      }
  }
  return out;
}

/// Depth-aware prompt embedding: three learnable class prompts attend over
/// the depth features, activating class-specific geometric maps; mask-pooled
/// reference embeddings anchor the prompts through a temperature-scaled
/// contrastive loss.
template <typename T>
class PromptModule {
 public:
  struct Activated {
    Tensor<T> attention;              // [N,3,S,S], values in (0,1)
    std::array<Tensor<T>, 3> f_g;     // class-activated features [N,C,S,S]
  };

  struct References {
    Tensor<T> r;                                  // [N,3,C]
    std::vector<std::array<bool, 3>> valid;       // per sample
  };

  PromptModule() = default;
  PromptModule(const ModelConfig& cfg, Rng& rng)
      : width_(cfg.common_width),
        tau_(static_cast<T>(cfg.tau)),
        softmax_space_(cfg.dpe_softmax_space),
        cosine_(!cfg.cl_raw_dot),
        mask_threshold_(cfg.mask_pool_threshold) {
    for (auto& p : prompt_rows_) {
      p = Tensor<T>::zeros({width_}, true);
      nn::fill_normal(p, rng, 0.02);
    }
  }

  /// The three class prompts stacked as [3,C] (rows: silhouette, ligament,
  /// ridge).
  Tensor<T> stacked_prompts() const {
    return ops::stack_rows<T>(
        {prompt_rows_[0], prompt_rows_[1], prompt_rows_[2]});
  }

  /// A_c = sigmoid(<P_c, F_d(x)> / sqrt(C)); F_G^c = F_d + A_c * F_d.
  Activated prompt_attention(const Tensor<T>& f_d) const {
    check_shape(f_d.dim(1) == width_,
                "prompt attention: feature width does not match prompts");
    const int n = f_d.dim(0), s = f_d.dim(2);
    const T scale = T(1) / std::sqrt(static_cast<T>(width_));
    auto logits = ops::prompt_logits(f_d, stacked_prompts(), scale);
    Activated out;
    if (softmax_space_) {
      auto flat = ops::reshape(logits, {n, 3, s * s});
      out.attention = ops::reshape(ops::softmax_lastdim(flat), {n, 3, s, s});
    } else {
      out.attention = ops::sigmoid(logits);
    }
    for (int c = 0; c < 3; ++c) {
      auto a_c = ops::slice_channels(out.attention, c, 1);
      out.f_g[c] = ops::add(f_d, ops::scale_spatial(f_d, a_c));
    }
    return out;
  }

  /// Masked average pooling of depth features under the downsampled ground
  /// truth; classes that are absent or vanish under downsampling are
  /// flagged invalid and excluded from the loss.
  References reference_embeddings(
      const Tensor<T>& f_d, const std::vector<float>& masks_full, int h,
      int w, const std::vector<std::array<bool, 3>>& present) const {
    const int n = f_d.dim(0), s = f_d.dim(2);
    const std::vector<T> m =
        downsample_masks<T>(masks_full, n, h, w, s, mask_threshold_);
    References refs;
    refs.r = ops::masked_avgpool(f_d, m, 3, T(1e-6));
    refs.valid.resize(n);
    const std::int64_t ss = static_cast<std::int64_t>(s) * s;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < 3; ++c) {
        T acc = T(0);
        const T* mv = m.data() + (static_cast<std::int64_t>(b) * 3 + c) * ss;
        for (std::int64_t i = 0; i < ss; ++i) acc += mv[i];
        refs.valid[b][c] = present[b][c] && acc > T(0);
      }
    return refs;
  }

  /// Batch contrastive loss: per-sample negated log-softmax over valid
  /// classes, averaged over the samples that have at least one valid class.
  /// Returns exact zero (flagged) when nothing is valid.
  Tensor<T> contrastive_loss(const References& refs, bool* skipped) const {
    const int n = refs.r.dim(0);
    const Tensor<T> p = stacked_prompts();
    Tensor<T> acc;
    int used = 0;
    for (int b = 0; b < n; ++b) {
      const std::vector<bool> valid(refs.valid[b].begin(),
                                    refs.valid[b].end());
      bool sample_skipped = false;
      auto term = ops::contrastive_prompt_loss(
          p, select_sample(refs.r, b), valid, tau_, cosine_, &sample_skipped);
      if (sample_skipped) continue;
      acc = acc.defined() ? ops::add(acc, term) : term;
      ++used;
    }
    if (skipped) *skipped = (used == 0);
    if (used == 0) return Tensor<T>::scalar(T(0));
    return ops::mul_scalar(acc, T(1) / static_cast<T>(used));
  }

  Tensor<T>& prompt_row(int c) { return prompt_rows_[c]; }

  void collect(nn::ParamList<T>& out, const std::string& p) {
    nn::add_param(out, p + ".silhouette", prompt_rows_[0]);
    nn::add_param(out, p + ".ligament", prompt_rows_[1]);
    nn::add_param(out, p + ".ridge", prompt_rows_[2]);
  }

 private:
  std::array<Tensor<T>, 3> prompt_rows_;  // silhouette, ligament, ridge
  int width_ = 256;
  T tau_ = T(0.07);
  bool softmax_space_ = false;
  bool cosine_ = true;
  double mask_threshold_ = 0.5;
};

}  // namespace landnet::model

#endif  // LANDNET_MODEL_PROMPTS_HPP
