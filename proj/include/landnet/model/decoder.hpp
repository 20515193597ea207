#ifndef LANDNET_MODEL_DECODER_HPP
#define LANDNET_MODEL_DECODER_HPP

#include "landnet/core/nn.hpp"
#include "landnet/model/config.hpp"
#include "landnet/model/fusion.hpp"

namespace landnet::model {

/// Convolutional decoder: three 2x upsample stages from stride 16, fusing
/// the stride-8 and stride-4 rgb skips, width halving per stage; a 1x1 head
/// produces three independent per-class logit maps which are upsampled to
/// the input resolution. Classes are not softmax-competitive: each map gets
/// its own sigmoid.
template <typename T>
class Decoder {
 public:
  struct Out {
    Tensor<T> logits;  // [N,3,H,W]
    Tensor<T> probs;   // sigmoid(logits)
  };

  Decoder() = default;
  Decoder(const ModelConfig& cfg, Rng& rng) {
    const int c = cfg.common_width;
    const int g = cfg.gn_groups;
    up1_ = nn::ConvGnRelu<T>(c + 128, c / 2, 3, rng, pick_groups(c / 2, g));
    up2_ = nn::ConvGnRelu<T>(c / 2 + 64, c / 4, 3, rng,
                             pick_groups(c / 4, g));
    up3_ = nn::ConvGnRelu<T>(c / 4, c / 8, 3, rng, pick_groups(c / 8, g));
    head_ = nn::Conv2d<T>(c / 8, 3, 1, 1, 0, rng);
    // thin curves cover a small pixel fraction; bias the initial logits
    // toward background so early training is not dominated by flooding
    for (int i = 0; i < 3; ++i) head_.bias().data()[i] = T(-2);
  }

  Out forward(const Tensor<T>& decoder_input, const Tensor<T>& skip8,
              const Tensor<T>& skip4, int out_res) const {
    check_shape(skip8.defined() && skip4.defined(),
                "decoder: missing skip features");
    const int s = decoder_input.dim(2);
    check_shape(skip8.dim(2) == 2 * s && skip4.dim(2) == 4 * s,
                "decoder: skip strides do not match the decoder input");
    auto x = ops::upsample_bilinear(decoder_input, 2 * s, 2 * s);
    x = up1_.forward(ops::concat_channels<T>({x, skip8}));
    x = ops::upsample_bilinear(x, 4 * s, 4 * s);
    x = up2_.forward(ops::concat_channels<T>({x, skip4}));
    x = up3_.forward(ops::upsample_bilinear(x, 8 * s, 8 * s));
    Out out;
    out.logits = ops::upsample_bilinear(head_.forward(x), out_res, out_res);
    out.probs = ops::sigmoid(out.logits);
    return out;
  }

  void collect(nn::ParamList<T>& out, const std::string& p) {
    up1_.collect(out, p + ".up1");
    up2_.collect(out, p + ".up2");
    up3_.collect(out, p + ".up3");
    head_.collect(out, p + ".head");
  }

 private:
  nn::ConvGnRelu<T> up1_, up2_, up3_;
  nn::Conv2d<T> head_;
};

}  // namespace landnet::model

#endif  // LANDNET_MODEL_DECODER_HPP
