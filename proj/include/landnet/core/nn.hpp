#ifndef LANDNET_CORE_NN_HPP
#define LANDNET_CORE_NN_HPP

#include <string>
#include <vector>

#include "landnet/core/ops.hpp"
#include "landnet/core/ops_conv.hpp"
#include "landnet/core/ops_norm.hpp"

namespace landnet::nn {

/// One named tensor of model state. `frozen` parameters are excluded from
/// optimization and covered by the frozen-weight audit; `buffer` marks
/// non-learnable state (running statistics) that is serialized but neither
/// optimized nor frozen-checksummed.
template <typename T>
struct ParamEntry {
  std::string name;
  Tensor<T> tensor;
  bool frozen = false;
  bool buffer = false;
};

template <typename T>
using ParamList = std::vector<ParamEntry<T>>;

template <typename T>
void add_param(ParamList<T>& out, const std::string& name,
               const Tensor<T>& t, bool frozen = false, bool buffer = false) {
  out.push_back({name, t, frozen, buffer});
}

// -- initializers ------------------------------------------------------------

template <typename T>
void fill_normal(Tensor<T>& t, Rng& rng, double stddev) {
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t.data()[i] = static_cast<T>(rng.normal(0.0, stddev));
}

/// Kaiming-normal with fan_out mode, the convention for conv layers feeding
/// a relu.
template <typename T>
void init_conv_kaiming(Tensor<T>& w, Rng& rng) {
  const int cout = w.dim(0), k = w.dim(2);
  const double fan_out = static_cast<double>(cout) * k * k;
  fill_normal(w, rng, std::sqrt(2.0 / fan_out));
}

template <typename T>
void init_linear(Tensor<T>& w, Rng& rng) {
  const double fan_in = w.dim(1);
  fill_normal(w, rng, std::sqrt(2.0 / fan_in));
}

// -- modules -----------------------------------------------------------------

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int cin, int cout, int k, int stride, int pad, Rng& rng)
      : stride_(stride), pad_(pad) {
    w_ = Tensor<T>::zeros({cout, cin, k, k}, true);
    b_ = Tensor<T>::zeros({cout}, true);
    init_conv_kaiming(w_, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    return ops::conv2d(x, w_, b_, stride_, pad_);
  }

  void collect(ParamList<T>& out, const std::string& prefix,
               bool frozen = false) {
    add_param(out, prefix + ".weight", w_, frozen);
    add_param(out, prefix + ".bias", b_, frozen);
  }

  Tensor<T>& weight() { return w_; }
  Tensor<T>& bias() { return b_; }

 private:
  Tensor<T> w_, b_;
  int stride_ = 1, pad_ = 0;
};

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int c) {
    gamma_ = Tensor<T>::full({c}, T(1));
    gamma_.set_requires_grad(true);
    beta_ = Tensor<T>::zeros({c}, true);
    running_mean_ = Tensor<T>::zeros({c});
    running_var_ = Tensor<T>::full({c}, T(1));
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    return ops::batch_norm2d(x, gamma_, beta_, running_mean_.values(),
                             running_var_.values(), training_);
  }

  void set_training(bool t) { training_ = t; }

  void collect(ParamList<T>& out, const std::string& prefix,
               bool frozen = false) {
    add_param(out, prefix + ".gamma", gamma_, frozen);
    add_param(out, prefix + ".beta", beta_, frozen);
    add_param(out, prefix + ".running_mean", running_mean_, false, true);
    add_param(out, prefix + ".running_var", running_var_, false, true);
  }

 private:
  Tensor<T> gamma_, beta_;
  mutable Tensor<T> running_mean_, running_var_;
  bool training_ = true;
};

template <typename T>
class GroupNorm {
 public:
  GroupNorm() = default;
  GroupNorm(int groups, int c) : groups_(groups) {
    gamma_ = Tensor<T>::full({c}, T(1));
    gamma_.set_requires_grad(true);
    beta_ = Tensor<T>::zeros({c}, true);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    return ops::group_norm(x, gamma_, beta_, groups_);
  }

  void collect(ParamList<T>& out, const std::string& prefix,
               bool frozen = false) {
    add_param(out, prefix + ".gamma", gamma_, frozen);
    add_param(out, prefix + ".beta", beta_, frozen);
  }

 private:
  Tensor<T> gamma_, beta_;
  int groups_ = 8;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, Rng& rng) {
    w_ = Tensor<T>::zeros({out, in}, true);
    b_ = Tensor<T>::zeros({out}, true);
    init_linear(w_, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    return ops::linear(x, w_, b_);
  }

  void collect(ParamList<T>& out, const std::string& prefix,
               bool frozen = false) {
    add_param(out, prefix + ".weight", w_, frozen);
    add_param(out, prefix + ".bias", b_, frozen);
  }

  Tensor<T>& weight() { return w_; }
  Tensor<T>& bias() { return b_; }

 private:
  Tensor<T> w_, b_;
};

/// Squeeze-and-excitation channel gate: per-channel scale in (0,1) from the
/// globally pooled descriptor through a bottleneck of ratio r.
template <typename T>
class SEBlock {
 public:
  SEBlock() = default;
  SEBlock(int c, int reduction, Rng& rng) {
    if (c < reduction)
      throw ConfigError("SE block: channels (" + std::to_string(c) +
                        ") smaller than reduction ratio " +
                        std::to_string(reduction));
    fc1_ = Linear<T>(c, c / reduction, rng);
    fc2_ = Linear<T>(c / reduction, c, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    auto s = ops::global_avgpool(x);           // [N,C]
    s = ops::relu(fc1_.forward(s));            // [N,C/r]
    s = ops::sigmoid(fc2_.forward(s));         // [N,C]
    return ops::scale_channels(x, s);
  }

  void collect(ParamList<T>& out, const std::string& prefix,
               bool frozen = false) {
    fc1_.collect(out, prefix + ".fc1", frozen);
    fc2_.collect(out, prefix + ".fc2", frozen);
  }

 private:
  Linear<T> fc1_, fc2_;
};

/// conv3x3 -> group norm -> relu, the workhorse block of the fusion and
/// decoder stages.
template <typename T>
class ConvGnRelu {
 public:
  ConvGnRelu() = default;
  ConvGnRelu(int cin, int cout, int k, Rng& rng, int groups = 8)
      : conv_(cin, cout, k, 1, k / 2, rng), norm_(groups, cout) {}

  Tensor<T> forward(const Tensor<T>& x) const {
    return ops::relu(norm_.forward(conv_.forward(x)));
  }

  void collect(ParamList<T>& out, const std::string& prefix,
               bool frozen = false) {
    conv_.collect(out, prefix + ".conv", frozen);
    norm_.collect(out, prefix + ".norm", frozen);
  }

 private:
  Conv2d<T> conv_;
  GroupNorm<T> norm_;
};

}  // namespace landnet::nn

#endif  // LANDNET_CORE_NN_HPP
