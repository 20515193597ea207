#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "landnet/model/prompts.hpp"
#include "test_util.hpp"

using namespace landnet;
using namespace landnet::model;
using landnet::testutil::grad_check;
using landnet::testutil::random_tensor;
using D = Tensor<double>;

namespace {

ModelConfig tiny_cfg(int c = 8) {
  ModelConfig cfg;
  cfg.resolution = 64;
  cfg.common_width = c;
  cfg.vit_dim = 64;
  cfg.vit_blocks = 1;
  cfg.se_reduction = 4;
  cfg.gn_groups = 4;
  return cfg;
}

}  // namespace

TEST_CASE("zero prompt gives uniform 0.5 attention and 1.5x features") {
  Rng rng(3);
  ModelConfig cfg = tiny_cfg();
  PromptModule<double> dpe(cfg, rng);
  for (std::int64_t i = 0; i < dpe.prompt_row(1).numel(); ++i)
    dpe.prompt_row(1).data()[i] = 0.0;

  auto f_d = random_tensor<double>({2, 8, 4, 4}, rng, -1.0, 1.0, false);
  auto act = dpe.prompt_attention(f_d);
  CHECK(act.attention.shape() == std::vector<int>{2, 3, 4, 4});
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < 16; ++i)
      CHECK(act.attention.data()[(n * 3 + 1) * 16 + i] ==
            doctest::Approx(0.5));
  for (std::int64_t i = 0; i < f_d.numel(); ++i)
    CHECK(act.f_g[1].data()[i] == doctest::Approx(1.5 * f_d.data()[i]));
}

TEST_CASE("large negative alignment collapses to the residual identity") {
  Rng rng(5);
  ModelConfig cfg = tiny_cfg();
  PromptModule<double> dpe(cfg, rng);
  auto f_d = D::full({1, 8, 4, 4}, 1.0);  // positive features
  for (std::int64_t i = 0; i < dpe.prompt_row(0).numel(); ++i)
    dpe.prompt_row(0).data()[i] = -1e4;
  auto act = dpe.prompt_attention(f_d);
  for (int i = 0; i < 16; ++i) {
    CHECK(act.attention.data()[i] < 1e-12);
    CHECK(act.f_g[0].data()[i] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("attention keeps the feature ratio in (1,2) and the residual is exact") {
  Rng rng(7);
  ModelConfig cfg = tiny_cfg();
  PromptModule<double> dpe(cfg, rng);
  for (int trial = 0; trial < 100; ++trial) {
    auto f_d = random_tensor<double>({1, 8, 4, 4}, rng, 0.1, 1.0, false);
    auto act = dpe.prompt_attention(f_d);
    for (int c = 0; c < 3; ++c)
      for (std::int64_t i = 0; i < f_d.numel(); ++i) {
        const double ratio = act.f_g[c].data()[i] / f_d.data()[i];
        CHECK(ratio > 1.0);
        CHECK(ratio < 2.0);
        // F_G - F_d == A * F_d, exactly as computed
        const double a =
            act.attention
                .data()[(0 * 3 + c) * 16 + static_cast<int>(i % 16)];
        CHECK(act.f_g[c].data()[i] - f_d.data()[i] ==
              doctest::Approx(a * f_d.data()[i]).epsilon(1e-12));
      }
  }
}

TEST_CASE("prompt gradients flow through the attention path") {
  Rng rng(11);
  ModelConfig cfg = tiny_cfg();
  PromptModule<double> dpe(cfg, rng);
  auto f_d = random_tensor<double>({1, 8, 4, 4}, rng, -1.0, 1.0, false);
  auto wsum = random_tensor<double>({1, 8, 4, 4}, rng, 0.1, 1.0, false);
  std::vector<D> params = {dpe.prompt_row(0), dpe.prompt_row(1),
                           dpe.prompt_row(2)};
  CHECK(grad_check(
            [&] {
              auto act = dpe.prompt_attention(f_d);
              auto s = ops::mul(act.f_g[0], wsum);
              s = ops::add(s, ops::mul(act.f_g[1], wsum));
              s = ops::add(s, ops::mul(act.f_g[2], wsum));
              return ops::sum_all(s);
            },
            params) < 1e-5);
}

TEST_CASE("reference embeddings: full, empty and single-point masks") {
  Rng rng(13);
  ModelConfig cfg = tiny_cfg();
  PromptModule<double> dpe(cfg, rng);
  const int s = 4, c = 8;
  auto f_d = random_tensor<double>({1, c, s, s}, rng, -1.0, 1.0, false);

  std::vector<float> masks(3 * s * s, 0.0f);
  // class 0: everything; class 1: empty; class 2: single pixel (1,2)
  for (int i = 0; i < s * s; ++i) masks[i] = 1.0f;
  masks[2 * s * s + 1 * s + 2] = 1.0f;
  std::vector<std::array<bool, 3>> present = {{true, true, true}};

  auto refs = dpe.reference_embeddings(f_d, masks, s, s, present);
  CHECK(refs.valid[0] == std::array<bool, 3>{true, false, true});
  for (int ch = 0; ch < c; ++ch) {
    double mean = 0;
    for (int i = 0; i < s * s; ++i) mean += f_d.data()[ch * s * s + i];
    mean /= s * s;
    CHECK(refs.r.data()[ch] == doctest::Approx(mean).epsilon(1e-5));
    CHECK(refs.r.data()[1 * c + ch] == 0.0);  // empty class zeroed
    CHECK(refs.r.data()[2 * c + ch] ==
          doctest::Approx(f_d.data()[ch * s * s + 1 * s + 2]).epsilon(1e-5));
  }
}

TEST_CASE("reference embeddings respect area downsampling of fat masks") {
  Rng rng(17);
  ModelConfig cfg = tiny_cfg();
  PromptModule<double> dpe(cfg, rng);
  const int h = 16, s = 4;
  auto f_d = random_tensor<double>({1, 8, s, s}, rng, -1.0, 1.0, false);
  std::vector<float> masks(3 * h * h, 0.0f);
  // class 0 fully covers the top-left 4x4 input block -> one grid cell
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) masks[y * h + x] = 1.0f;
  std::vector<std::array<bool, 3>> present = {{true, true, true}};
  auto refs = dpe.reference_embeddings(f_d, masks, h, h, present);
  CHECK(refs.valid[0][0]);
  for (int ch = 0; ch < 8; ++ch)
    CHECK(refs.r.data()[ch] ==
          doctest::Approx(f_d.data()[ch * s * s]).epsilon(1e-5));
}

TEST_CASE("contrastive loss closed forms") {
  // uniform similarities over three valid classes -> ln 3
  auto p = D::full({3, 4}, 1.0);
  auto r = D::full({3, 4}, 0.5);
  bool skipped = true;
  auto loss =
      ops::contrastive_prompt_loss(p, r, {true, true, true}, 0.07, true,
                                   &skipped);
  CHECK_FALSE(skipped);
  CHECK(loss.item() == doctest::Approx(std::log(3.0)).epsilon(1e-9));

  // orthonormal prompts and references, tau = 0.1: diagonal sims/tau = 10
  auto pe = D::zeros({3, 4});
  auto re = D::zeros({3, 4});
  for (int i = 0; i < 3; ++i) pe.data()[i * 4 + i] = re.data()[i * 4 + i] = 1.0;
  auto l2 = ops::contrastive_prompt_loss(pe, re, {true, true, true}, 0.1,
                                         true, &skipped);
  CHECK(l2.item() ==
        doctest::Approx(std::log(1.0 + 2.0 * std::exp(-10.0))).epsilon(1e-7));

  // single valid class: softmax over one entry
  auto l1 = ops::contrastive_prompt_loss(pe, re, {false, true, false}, 0.07,
                                         true, &skipped);
  CHECK_FALSE(skipped);
  CHECK(l1.item() == doctest::Approx(0.0));

  // no valid class: zero with the skipped flag
  auto l0 = ops::contrastive_prompt_loss(pe, re, {false, false, false}, 0.07,
                                         true, &skipped);
  CHECK(skipped);
  CHECK(l0.item() == 0.0);

  CHECK_THROWS_AS(ops::contrastive_prompt_loss(pe, re, {true, true, true},
                                               -1.0, true, nullptr),
                  ConfigError);
}

TEST_CASE("contrastive loss bounds over random instances") {
  Rng rng(23);
  const double tau = 0.07;
  for (int t = 0; t < 200; ++t) {
    auto p = random_tensor<double>({3, 6}, rng, -1.0, 1.0, false);
    auto r = random_tensor<double>({3, 6}, rng, -1.0, 1.0, false);
    std::vector<bool> valid = {true, rng.bernoulli(0.7), rng.bernoulli(0.7)};
    int nv = 0;
    for (bool v : valid) nv += v;
    auto loss = ops::contrastive_prompt_loss(p, r, valid, tau, true, nullptr);
    CHECK(loss.item() >= -1e-12);
    CHECK(loss.item() <= std::log(static_cast<double>(nv)) + 2.0 / tau);
  }
}

namespace {

/// Independent reference for the contrastive loss gradient, derived and
/// implemented separately from the op (plain per-row chain rule over the
/// normalized similarity matrix).
void reference_contrastive_grad(const std::vector<double>& p,
                                const std::vector<double>& r,
                                const std::vector<bool>& valid, double tau,
                                bool cosine, int k, int c, double* loss_out,
                                std::vector<double>* gp,
                                std::vector<double>* gr) {
  std::vector<int> vs;
  for (int i = 0; i < k; ++i)
    if (valid[i]) vs.push_back(i);
  const int nv = static_cast<int>(vs.size());
  auto norm = [&](const std::vector<double>& m, int i) {
    double s = 0;
    for (int j = 0; j < c; ++j) s += m[i * c + j] * m[i * c + j];
    return std::sqrt(s);
  };
  std::vector<double> sim(k * k, 0), q(k * k, 0);
  for (int l : vs)
    for (int kk : vs) {
      double dot = 0;
      for (int j = 0; j < c; ++j) dot += p[l * c + j] * r[kk * c + j];
      sim[l * k + kk] = cosine ? dot / (norm(p, l) * norm(r, kk)) : dot;
    }
  double loss = 0;
  for (int l : vs) {
    double mx = -1e18;
    for (int kk : vs) mx = std::max(mx, sim[l * k + kk] / tau);
    double z = 0;
    for (int kk : vs) z += std::exp(sim[l * k + kk] / tau - mx);
    for (int kk : vs) q[l * k + kk] = std::exp(sim[l * k + kk] / tau - mx) / z;
    loss += mx + std::log(z) - sim[l * k + l] / tau;
  }
  *loss_out = loss / nv;
  gp->assign(k * c, 0);
  gr->assign(k * c, 0);
  for (int l : vs)
    for (int kk : vs) {
      const double d = (q[l * k + kk] - (l == kk ? 1 : 0)) / (nv * tau);
      if (cosine) {
        const double pn = norm(p, l), rn = norm(r, kk);
        for (int j = 0; j < c; ++j) {
          (*gp)[l * c + j] += d * (r[kk * c + j] / (pn * rn) -
                                   sim[l * k + kk] * p[l * c + j] / (pn * pn));
          (*gr)[kk * c + j] += d * (p[l * c + j] / (pn * rn) -
                                    sim[l * k + kk] * r[kk * c + j] / (rn * rn));
        }
      } else {
        for (int j = 0; j < c; ++j) {
          (*gp)[l * c + j] += d * r[kk * c + j];
          (*gr)[kk * c + j] += d * p[l * c + j];
        }
      }
    }
}

}  // namespace

TEST_CASE("contrastive loss gradient matches finite differences (50 instances)") {
  Rng rng(29);
  for (int t = 0; t < 50; ++t) {
    auto p = random_tensor<double>({3, 5}, rng, -1.0, 1.0);
    auto r = random_tensor<double>({3, 5}, rng, -1.0, 1.0);
    const bool cosine = t % 4 != 3;  // mostly cosine, some raw-dot
    std::vector<bool> valid = {true, t % 3 != 1, t % 5 != 2};
    const double err = grad_check(
        [&] {
          return ops::contrastive_prompt_loss(p, r, valid, 0.07, cosine,
                                              nullptr);
        },
        {p, r});
    CHECK(err < 1e-4);

    // stronger: element-level agreement with an independent derivation
    p.zero_grad();
    r.zero_grad();
    auto loss =
        ops::contrastive_prompt_loss(p, r, valid, 0.07, cosine, nullptr);
    loss.backward();
    double ref_loss = 0;
    std::vector<double> gp, gr;
    reference_contrastive_grad(
        std::vector<double>(p.data(), p.data() + 15),
        std::vector<double>(r.data(), r.data() + 15), valid, 0.07, cosine, 3,
        5, &ref_loss, &gp, &gr);
    CHECK(loss.item() == doctest::Approx(ref_loss).epsilon(1e-12));
    for (int i = 0; i < 15; ++i) {
      CHECK(std::abs(p.grad()[i] - gp[i]) < 1e-10);
      CHECK(std::abs(r.grad()[i] - gr[i]) < 1e-10);
    }
  }
}

TEST_CASE("contrastive loss is permutation equivariant and cosine-scale invariant") {
  Rng rng(31);
  auto p = random_tensor<double>({3, 5}, rng, -1.0, 1.0, false);
  auto r = random_tensor<double>({3, 5}, rng, -1.0, 1.0, false);
  const std::vector<bool> valid = {true, true, false};
  const double base =
      ops::contrastive_prompt_loss(p, r, valid, 0.07, true, nullptr).item();

  // joint permutation (0 1 2) -> (2 0 1)
  const int perm[3] = {2, 0, 1};
  auto pp = D::zeros({3, 5});
  auto rp = D::zeros({3, 5});
  std::vector<bool> vp(3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) {
      pp.data()[perm[i] * 5 + j] = p.data()[i * 5 + j];
      rp.data()[perm[i] * 5 + j] = r.data()[i * 5 + j];
    }
    vp[perm[i]] = valid[i];
  }
  const double permuted =
      ops::contrastive_prompt_loss(pp, rp, vp, 0.07, true, nullptr).item();
  CHECK(permuted == doctest::Approx(base).epsilon(1e-12));

  auto r2 = D::zeros({3, 5});
  for (int i = 0; i < 15; ++i) r2.data()[i] = 2.0 * r.data()[i];
  const double scaled =
      ops::contrastive_prompt_loss(p, r2, valid, 0.07, true, nullptr).item();
  CHECK(scaled == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("batch contrastive loss averages over samples with valid classes") {
  Rng rng(37);
  ModelConfig cfg = tiny_cfg();
  PromptModule<double> dpe(cfg, rng);
  const int s = 4;
  auto f_d = random_tensor<double>({2, 8, s, s}, rng, -1.0, 1.0, false);
  std::vector<float> masks(2 * 3 * s * s, 0.0f);
  for (int i = 0; i < s * s; ++i) masks[i] = 1.0f;  // sample 0, class 0 only
  std::vector<std::array<bool, 3>> present = {{true, true, true},
                                              {true, true, true}};
  auto refs = dpe.reference_embeddings(f_d, masks, s, s, present);
  CHECK(refs.valid[0] == std::array<bool, 3>{true, false, false});
  CHECK(refs.valid[1] == std::array<bool, 3>{false, false, false});
  bool skipped = true;
  auto loss = dpe.contrastive_loss(refs, &skipped);
  CHECK_FALSE(skipped);  // sample 0 contributes a (degenerate) term
  CHECK(loss.item() == doctest::Approx(0.0));

  std::vector<float> empty(2 * 3 * s * s, 0.0f);
  auto refs2 = dpe.reference_embeddings(f_d, empty, s, s, present);
  auto loss2 = dpe.contrastive_loss(refs2, &skipped);
  CHECK(skipped);
  CHECK(loss2.item() == 0.0);
}
