#ifndef LANDNET_CORE_OPTIM_HPP
#define LANDNET_CORE_OPTIM_HPP

#include <cmath>
#include <vector>

#include "landnet/core/nn.hpp"

namespace landnet {

/// Adam with L2-style weight decay folded into the gradient (the convention
/// of the classic implementation, not the decoupled variant). Frozen
/// parameters and buffers are never registered, so they cannot be updated.
template <typename T>
class Adam {
 public:
  struct Options {
    T lr = T(1e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    T weight_decay = T(0);
    T grad_clip = T(0);  // global-norm clip; <= 0 disables
  };

  Adam() = default;
  Adam(const nn::ParamList<T>& params, Options opts) : opts_(opts) {
    for (const auto& p : params) {
      if (p.frozen || p.buffer) continue;
      params_.push_back(p.tensor);
      slots_.push_back({std::vector<T>(p.tensor.numel(), T(0)),
                        std::vector<T>(p.tensor.numel(), T(0))});
    }
  }

  void set_lr(T lr) { opts_.lr = lr; }
  T lr() const { return opts_.lr; }
  std::int64_t step_count() const { return t_; }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++t_;
    const T bc1 = T(1) - std::pow(opts_.beta1, static_cast<T>(t_));
    const T bc2 = T(1) - std::pow(opts_.beta2, static_cast<T>(t_));
    T clip_scale = T(1);
    if (opts_.grad_clip > T(0)) {
      double sq = 0.0;
      for (auto& p : params_) {
        if (!p.has_grad()) continue;
        const T* g = p.grad();
        for (std::int64_t i = 0; i < p.numel(); ++i)
          sq += static_cast<double>(g[i]) * g[i];
      }
      const double norm = std::sqrt(sq);
      if (norm > static_cast<double>(opts_.grad_clip))
        clip_scale = static_cast<T>(static_cast<double>(opts_.grad_clip) /
                                    norm);
    }
    for (size_t pi = 0; pi < params_.size(); ++pi) {
      auto& p = params_[pi];
      auto& slot = slots_[pi];
      T* w = p.data();
      T* m = slot.m.data();
      T* v = slot.v.data();
      const T* g0 = p.has_grad() ? p.grad() : nullptr;
      const auto opts = opts_;
      par_for(p.numel(), [&](std::int64_t i) {
        T g = g0 ? g0[i] * clip_scale : T(0);
        if (opts.weight_decay != T(0)) g += opts.weight_decay * w[i];
        m[i] = opts.beta1 * m[i] + (T(1) - opts.beta1) * g;
        v[i] = opts.beta2 * v[i] + (T(1) - opts.beta2) * g * g;
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        w[i] -= opts.lr * mhat / (std::sqrt(vhat) + opts.eps);
      });
    }
  }

 private:
  struct Slot {
    std::vector<T> m, v;
  };
  Options opts_;
  std::vector<Tensor<T>> params_;
  std::vector<Slot> slots_;
  std::int64_t t_ = 0;
};

/// Cosine annealing from `lr0` at epoch 0 down to `lr_floor` at the final
/// epoch (inclusive), no restarts.
template <typename T>
T cosine_annealed_lr(T lr0, T lr_floor, int epoch, int total_epochs) {
  if (total_epochs <= 1) return lr0;
  const double t = static_cast<double>(epoch) /
                   static_cast<double>(total_epochs - 1);
  const double cosv = std::cos(3.14159265358979323846 * std::min(1.0, t));
  return static_cast<T>(lr_floor + 0.5 * (lr0 - lr_floor) * (1.0 + cosv));
}

}  // namespace landnet

#endif  // LANDNET_CORE_OPTIM_HPP
