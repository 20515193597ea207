#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "landnet/core/nn.hpp"
#include "landnet/core/ops.hpp"
#include "landnet/core/ops_conv.hpp"
#include "landnet/core/ops_loss.hpp"
#include "landnet/core/ops_norm.hpp"
#include "landnet/core/optim.hpp"
#include "test_util.hpp"

using namespace landnet;
using landnet::testutil::grad_check;
using landnet::testutil::random_tensor;
using D = Tensor<double>;

namespace {
constexpr double kTol = 1e-6;
}

TEST_CASE("elementwise ops: values and gradients") {
  Rng rng(7);
  auto a = random_tensor<double>({2, 3}, rng);
  auto b = random_tensor<double>({2, 3}, rng, 0.5, 2.0);

  CHECK(grad_check([&] { return ops::sum_all(ops::add(a, b)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return ops::sum_all(ops::sub(a, b)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return ops::sum_all(ops::mul(a, b)); }, {a, b}) < kTol);
  CHECK(grad_check([&] { return ops::sum_all(ops::div(a, b)); }, {a, b}) < 1e-5);
  CHECK(grad_check([&] { return ops::sum_all(ops::mul_scalar(a, 2.5)); }, {a}) < kTol);
  CHECK(grad_check([&] { return ops::sum_all(ops::add_scalar(a, -1.5)); }, {a}) < kTol);
  CHECK(grad_check([&] { return ops::sum_all(ops::rsub_scalar(1.0, a)); }, {a}) < kTol);
  CHECK(grad_check([&] { return ops::mean_all(ops::sigmoid(a)); }, {a}) < 1e-5);
  CHECK(grad_check([&] { return ops::mean_all(ops::gelu(a)); }, {a}) < 1e-5);
}

TEST_CASE("reused tensor accumulates gradient from both paths") {
  auto x = D::from({2}, {3.0, -2.0}, true);
  auto y = ops::sum_all(ops::add(ops::mul(x, x), x));  // x^2 + x
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(2 * 3.0 + 1));
  CHECK(x.grad()[1] == doctest::Approx(2 * -2.0 + 1));
}

TEST_CASE("relu gradient away from the kink") {
  Rng rng(3);
  auto a = random_tensor<double>({4, 4}, rng, 0.2, 1.0);
  auto b = random_tensor<double>({4, 4}, rng, -1.0, -0.2);
  CHECK(grad_check([&] { return ops::sum_all(ops::relu(a)); }, {a}) < kTol);
  auto z = ops::sum_all(ops::relu(b));
  z.backward();
  for (int i = 0; i < 16; ++i) CHECK(b.grad()[i] == 0.0);
}

TEST_CASE("reductions and reshapes") {
  Rng rng(11);
  auto x = random_tensor<double>({2, 3, 4, 4}, rng);
  CHECK(grad_check([&] { return ops::sum_all(ops::sum_spatial(x)); }, {x}) < kTol);
  CHECK(grad_check([&] { return ops::mean_all(ops::reshape(x, {6, 16})); }, {x}) < kTol);

  auto y = ops::sum_spatial(x);
  CHECK(y.shape() == std::vector<int>{2, 3});
  double manual = 0;
  for (int i = 0; i < 16; ++i) manual += x.data()[i];
  CHECK(y.data()[0] == doctest::Approx(manual));
}

TEST_CASE("concat and slice channels round trip") {
  Rng rng(13);
  auto a = random_tensor<double>({2, 2, 3, 3}, rng);
  auto b = random_tensor<double>({2, 3, 3, 3}, rng);
  auto cat = ops::concat_channels<double>({a, b});
  CHECK(cat.shape() == std::vector<int>{2, 5, 3, 3});
  auto back = ops::slice_channels(cat, 2, 3);
  for (std::int64_t i = 0; i < b.numel(); ++i)
    CHECK(back.data()[i] == b.data()[i]);
  CHECK(grad_check(
            [&] {
              auto c = ops::concat_channels<double>({a, b});
              return ops::sum_all(ops::mul(c, c));
            },
            {a, b}) < kTol);
  CHECK(grad_check(
            [&] {
              auto s = ops::slice_channels(ops::concat_channels<double>({a, b}), 1, 2);
              return ops::sum_all(ops::mul(s, s));
            },
            {a, b}) < kTol);
}

TEST_CASE("matmul and linear gradients") {
  Rng rng(17);
  auto a = random_tensor<double>({3, 4}, rng);
  auto b = random_tensor<double>({4, 5}, rng);
  CHECK(grad_check([&] { return ops::sum_all(ops::matmul(a, b)); }, {a, b}) < 1e-5);

  auto x = random_tensor<double>({3, 4}, rng);
  auto w = random_tensor<double>({2, 4}, rng);
  auto bias = random_tensor<double>({2}, rng);
  CHECK(grad_check(
            [&] {
              auto y = ops::linear(x, w, bias);
              return ops::sum_all(ops::mul(y, y));
            },
            {x, w, bias}) < 1e-5);
}

TEST_CASE("softmax rows sum to one, gradient correct") {
  Rng rng(19);
  auto x = random_tensor<double>({3, 5}, rng, -2.0, 2.0);
  auto y = ops::softmax_lastdim(x);
  for (int r = 0; r < 3; ++r) {
    double s = 0;
    for (int i = 0; i < 5; ++i) s += y.data()[r * 5 + i];
    CHECK(s == doctest::Approx(1.0));
  }
  auto wsum = random_tensor<double>({3, 5}, rng, 0.0, 1.0, false);
  CHECK(grad_check(
            [&] {
              return ops::sum_all(ops::mul(ops::softmax_lastdim(x), wsum));
            },
            {x}) < 1e-5);
}

TEST_CASE("broadcast gating ops") {
  Rng rng(23);
  auto x = random_tensor<double>({2, 3, 4, 4}, rng);
  auto s = random_tensor<double>({2, 3}, rng);
  auto a = random_tensor<double>({2, 1, 4, 4}, rng);
  CHECK(grad_check(
            [&] { return ops::sum_all(ops::scale_channels(x, s)); }, {x, s}) < kTol);
  CHECK(grad_check(
            [&] {
              auto y = ops::scale_spatial(x, a);
              return ops::sum_all(ops::mul(y, y));
            },
            {x, a}) < 1e-5);
  CHECK(grad_check(
            [&] {
              auto y = ops::broadcast_spatial(s, 4);
              return ops::sum_all(ops::mul(y, y));
            },
            {s}) < kTol);
  // global average pooling of a constant equals the constant
  auto c = D::full({1, 2, 3, 3}, 0.7);
  auto g = ops::global_avgpool(c);
  CHECK(g.data()[0] == doctest::Approx(0.7));
}

TEST_CASE("conv2d matches naive convolution") {
  Rng rng(29);
  const int n = 2, cin = 3, h = 6, w = 6, cout = 4, k = 3, stride = 2, pad = 1;
  auto x = random_tensor<double>({n, cin, h, w}, rng);
  auto wt = random_tensor<double>({cout, cin, k, k}, rng);
  auto b = random_tensor<double>({cout}, rng);
  auto y = ops::conv2d(x, wt, b, stride, pad);
  const int oh = (h + 2 * pad - k) / stride + 1;
  REQUIRE(y.shape() == std::vector<int>{n, cout, oh, oh});
  for (int bi = 0; bi < n; ++bi)
    for (int co = 0; co < cout; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < oh; ++ox) {
          double acc = b.data()[co];
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                acc += x.data()[((bi * cin + ci) * h + iy) * w + ix] *
                       wt.data()[((co * cin + ci) * k + ky) * k + kx];
              }
          CHECK(y.data()[((bi * cout + co) * oh + oy) * oh + ox] ==
                doctest::Approx(acc));
        }
}

TEST_CASE("conv2d gradients (several geometries)") {
  Rng rng(31);
  struct G { int cin, cout, k, stride, pad, h; };
  for (G g : {G{2, 3, 3, 1, 1, 5}, G{3, 2, 3, 2, 1, 6}, G{4, 2, 1, 1, 0, 4},
              G{2, 2, 7, 2, 3, 8}}) {
    auto x = random_tensor<double>({1, g.cin, g.h, g.h}, rng);
    auto wt = random_tensor<double>({g.cout, g.cin, g.k, g.k}, rng);
    auto b = random_tensor<double>({g.cout}, rng);
    CHECK(grad_check(
              [&] {
                auto y = ops::conv2d(x, wt, b, g.stride, g.pad);
                return ops::sum_all(ops::mul(y, y));
              },
              {x, wt, b}) < 1e-4);
  }
}

TEST_CASE("pooling ops") {
  Rng rng(37);
  auto x = random_tensor<double>({1, 2, 8, 8}, rng);
  auto y = ops::maxpool3x3_s2(x);
  CHECK(y.shape() == std::vector<int>{1, 2, 4, 4});
  CHECK(grad_check(
            [&] { return ops::sum_all(ops::mul(ops::maxpool3x3_s2(x), ops::maxpool3x3_s2(x))); },
            {x}) < 1e-5);

  // valid-count average pooling reproduces constants exactly, borders included
  auto c = D::full({1, 1, 5, 5}, 3.25);
  auto ac = ops::avgpool3x3_s1(c);
  for (int i = 0; i < 25; ++i) CHECK(ac.data()[i] == doctest::Approx(3.25));
  CHECK(grad_check(
            [&] {
              auto v = ops::avgpool3x3_s1(x);
              return ops::sum_all(ops::mul(v, v));
            },
            {x}) < 1e-5);
}

TEST_CASE("bilinear upsample: constants, shapes, gradient") {
  Rng rng(41);
  auto c = D::full({1, 1, 4, 4}, 2.0);
  auto up = ops::upsample_bilinear(c, 8, 8);
  for (int i = 0; i < 64; ++i) CHECK(up.data()[i] == doctest::Approx(2.0));

  auto x = random_tensor<double>({1, 2, 4, 4}, rng);
  CHECK(grad_check(
            [&] {
              auto y = ops::upsample_bilinear(x, 7, 9);
              return ops::sum_all(ops::mul(y, y));
            },
            {x}) < 1e-5);
}

TEST_CASE("batch norm: train and eval modes") {
  Rng rng(43);
  auto x = random_tensor<double>({3, 2, 4, 4}, rng);
  auto gamma = random_tensor<double>({2}, rng, 0.5, 1.5);
  auto beta = random_tensor<double>({2}, rng);
  std::vector<double> rm(2, 0.0), rv(2, 1.0);

  // train mode: output is standardized per channel
  {
    std::vector<double> rm2(2, 0.0), rv2(2, 1.0);
    auto y = ops::batch_norm2d(x, gamma, beta, rm2, rv2, true);
    for (int c = 0; c < 2; ++c) {
      double mean = 0, var = 0;
      for (int b = 0; b < 3; ++b)
        for (int i = 0; i < 16; ++i)
          mean += (y.data()[(b * 2 + c) * 16 + i] - beta.data()[c]);
      mean /= 48;
      CHECK(std::abs(mean) < 1e-9);
      (void)var;
    }
    CHECK(rm2[0] != 0.0);  // running stats updated
  }

  // a spatially varying weighting breaks the normalization invariance, so
  // the input gradient is nonzero and the check is meaningful
  auto wgt = random_tensor<double>({3, 2, 4, 4}, rng, 0.2, 1.0, false);
  CHECK(grad_check(
            [&] {
              std::vector<double> m(2, 0.0), v(2, 1.0);
              auto y = ops::batch_norm2d(x, gamma, beta, m, v, true);
              auto yw = ops::mul(y, wgt);
              return ops::sum_all(ops::mul(yw, yw));
            },
            {x, gamma, beta}) < 1e-4);
  CHECK(grad_check(
            [&] {
              std::vector<double> m(2, 0.1), v(2, 0.9);
              auto y = ops::batch_norm2d(x, gamma, beta, m, v, false);
              auto yw = ops::mul(y, wgt);
              return ops::sum_all(ops::mul(yw, yw));
            },
            {x, gamma, beta}) < 1e-5);
  (void)rm;
  (void)rv;
}

TEST_CASE("group norm gradient") {
  Rng rng(47);
  auto x = random_tensor<double>({2, 4, 3, 3}, rng);
  auto gamma = random_tensor<double>({4}, rng, 0.5, 1.5);
  auto beta = random_tensor<double>({4}, rng);
  auto wgt = random_tensor<double>({2, 4, 3, 3}, rng, 0.2, 1.0, false);
  CHECK(grad_check(
            [&] {
              auto y = ops::group_norm(x, gamma, beta, 2);
              auto yw = ops::mul(y, wgt);
              return ops::sum_all(ops::mul(yw, yw));
            },
            {x, gamma, beta}) < 1e-4);
}

TEST_CASE("prompt logits match manual dot products") {
  Rng rng(53);
  auto f = random_tensor<double>({2, 4, 3, 3}, rng);
  auto p = random_tensor<double>({3, 4}, rng);
  const double scale = 0.5;
  auto y = ops::prompt_logits(f, p, scale);
  CHECK(y.shape() == std::vector<int>{2, 3, 3, 3});
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 9; ++i) {
        double acc = 0;
        for (int c = 0; c < 4; ++c)
          acc += p.data()[k * 4 + c] * f.data()[(n * 4 + c) * 9 + i];
        CHECK(y.data()[(n * 3 + k) * 9 + i] == doctest::Approx(scale * acc));
      }
  CHECK(grad_check(
            [&] {
              auto z = ops::prompt_logits(f, p, scale);
              return ops::sum_all(ops::mul(z, z));
            },
            {f, p}) < 1e-5);
}

TEST_CASE("masked average pooling") {
  Rng rng(59);
  auto f = random_tensor<double>({1, 4, 2, 2}, rng);
  std::vector<double> mask(1 * 2 * 4, 0.0);
  mask[0] = 1.0;               // class 0: single cell (0,0)
  for (int i = 4; i < 8; ++i) mask[i] = 1.0;  // class 1: everything
  auto r = ops::masked_avgpool(f, mask, 2, 1e-6);
  CHECK(r.shape() == std::vector<int>{1, 2, 4});
  for (int c = 0; c < 4; ++c) {
    CHECK(r.data()[c] == doctest::Approx(f.data()[c * 4]).epsilon(1e-5));
    double mean = 0;
    for (int i = 0; i < 4; ++i) mean += f.data()[c * 4 + i];
    CHECK(r.data()[4 + c] == doctest::Approx(mean / 4).epsilon(1e-5));
  }
  CHECK(grad_check(
            [&] {
              auto rr = ops::masked_avgpool(f, mask, 2, 1e-6);
              return ops::sum_all(ops::mul(rr, rr));
            },
            {f}) < 1e-5);
}

TEST_CASE("adam takes a step against the gradient") {
  auto w = D::from({2}, {1.0, -1.0}, true);
  nn::ParamList<double> params;
  nn::add_param(params, "w", w);
  Adam<double>::Options opts;
  opts.lr = 0.1;
  Adam<double> adam(params, opts);
  auto loss = ops::sum_all(ops::mul(w, w));
  adam.zero_grad();
  loss.backward();
  adam.step();
  CHECK(w.data()[0] < 1.0);
  CHECK(w.data()[1] > -1.0);
}

TEST_CASE("cosine schedule endpoints and monotonicity") {
  const double lr0 = 1e-4, floor = 1e-6;
  const int epochs = 60;
  CHECK(cosine_annealed_lr(lr0, floor, 0, epochs) == doctest::Approx(lr0));
  CHECK(cosine_annealed_lr(lr0, floor, epochs - 1, epochs) ==
        doctest::Approx(floor));
  double prev = lr0 + 1;
  for (int e = 0; e < epochs; ++e) {
    const double lr = cosine_annealed_lr(lr0, floor, e, epochs);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("no-grad mode builds no graph") {
  auto x = D::from({2}, {1.0, 2.0}, true);
  NoGradGuard guard;
  auto y = ops::mul(x, x);
  CHECK_FALSE(y.requires_grad());
}
