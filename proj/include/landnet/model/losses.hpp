#ifndef LANDNET_MODEL_LOSSES_HPP
#define LANDNET_MODEL_LOSSES_HPP

#include <array>
#include <cmath>

#include "landnet/core/ops_loss.hpp"

namespace landnet::model {

/// Per-channel soft dice loss 1 - (2*sum(p*t)+eps)/(sum(p)+sum(t)+eps) with
/// eps = 1 by default (empty-vs-empty is lossless). probs [N,C,H,W] on the
/// graph, targets constant. Result [N,C].
template <typename T>
Tensor<T> dice_per_channel(const Tensor<T>& probs,
                           const std::vector<T>& targets, T eps = T(1)) {
  check_shape(static_cast<std::int64_t>(targets.size()) == probs.numel(),
              "dice: target size mismatch");
  Tensor<T> tgt = Tensor<T>::from(probs.shape(), targets);
  Tensor<T> tsum = ops::sum_spatial(tgt);  // constant [N,C]
  auto inter = ops::sum_spatial(ops::mul(probs, tgt));
  auto psum = ops::sum_spatial(probs);
  auto num = ops::add_scalar(ops::mul_scalar(inter, T(2)), eps);
  auto den = ops::add_scalar(ops::add(psum, tsum), eps);
  return ops::rsub_scalar(T(1), ops::div(num, den));
}

/// Per-channel pixel-mean binary cross-entropy on logits. Result [N,C].
template <typename T>
Tensor<T> bce_per_channel(const Tensor<T>& logits,
                          const std::vector<T>& targets) {
  return ops::bce_with_logits_per_channel(logits, targets);
}

template <typename T>
struct SegmentationLoss {
  Tensor<T> loss;      // scalar: mean over classes and batch of dice+bce
  Tensor<T> dice_nc;   // [N,C] per-class dice terms
  Tensor<T> bce_nc;    // [N,C] per-class bce terms
};

/// L_seg = (1/N_cls) sum_c (dice_c + bce_c), averaged over the batch.
/// Classes absent from a frame keep their all-zero target: the bce term
/// supervises all-negative output and the dice eps keeps empty-vs-empty at
/// zero loss.
template <typename T>
SegmentationLoss<T> segmentation_loss(const Tensor<T>& logits,
                                      const Tensor<T>& probs,
                                      const std::vector<T>& targets,
                                      T dice_eps = T(1)) {
  check_shape(probs.shape() == logits.shape(),
              "segmentation loss: probs/logits shape mismatch");
  SegmentationLoss<T> out;
  out.dice_nc = dice_per_channel(probs, targets, dice_eps);
  out.bce_nc = bce_per_channel(logits, targets);
  out.loss = ops::mean_all(ops::add(out.dice_nc, out.bce_nc));
  return out;
}

/// L_total = l_seg*seg + l_cl*cl + l_ana*ana, accumulated in that fixed
/// order. Any non-finite term aborts with the term named.
template <typename T>
Tensor<T> total_loss(const Tensor<T>& seg, const Tensor<T>& cl,
                     const Tensor<T>& ana,
                     const std::array<double, 3>& lambdas) {
  const std::array<std::pair<const char*, T>, 3> terms = {
      std::pair<const char*, T>{"seg", seg.item()},
      {"cl", cl.item()},
      {"ana", ana.item()}};
  for (const auto& [name, value] : terms)
    if (!std::isfinite(static_cast<double>(value)))
      throw NumericError(std::string("non-finite loss term '") + name + "': " +
                         std::to_string(static_cast<double>(value)));
  auto total = ops::mul_scalar(seg, static_cast<T>(lambdas[0]));
  total = ops::add(total, ops::mul_scalar(cl, static_cast<T>(lambdas[1])));
  total = ops::add(total, ops::mul_scalar(ana, static_cast<T>(lambdas[2])));
  return total;
}

// Plain scalar wrappers over single-plane inputs (shared code path with the
// graph ops, run without recording).

template <typename T>
T dice_loss_value(const std::vector<T>& prob, const std::vector<T>& target,
                  int h, int w, T eps = T(1)) {
  NoGradGuard ng;
  auto p = Tensor<T>::from({1, 1, h, w}, prob);
  return dice_per_channel(p, target, eps).item();
}

template <typename T>
T bce_loss_value(const std::vector<T>& logits, const std::vector<T>& target,
                 int h, int w) {
  NoGradGuard ng;
  auto z = Tensor<T>::from({1, 1, h, w}, logits);
  return bce_per_channel(z, target).item();
}

}  // namespace landnet::model

#endif  // LANDNET_MODEL_LOSSES_HPP
