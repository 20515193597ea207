// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with its measured values. Thresholds and tolerances are pinned in
// code; wall-clock budgets are asserted alongside the functional checks.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "landnet/harness/evaluator.hpp"
#include "landnet/harness/trainer.hpp"
#include "landnet/metrics/metrics.hpp"
#include "landnet/model/losses.hpp"
#include "landnet/model/prompts.hpp"
#include "test_util.hpp"

using namespace landnet;
using Clock = std::chrono::steady_clock;
using D = Tensor<double>;

namespace {

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int criterion, const std::string& what, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL",
              criterion, what.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::vector<float> random_mask(Rng& rng, int h, int w, double density) {
  std::vector<float> v(static_cast<size_t>(h) * w, 0.0f);
  for (auto& x : v) x = rng.bernoulli(density) ? 1.0f : 0.0f;
  return v;
}

double brute_assd(const std::vector<float>& p, const std::vector<float>& g,
                  int h, int w) {
  std::vector<std::pair<int, int>> ps, gs;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (p[static_cast<size_t>(y) * w + x] >= 0.5f) ps.emplace_back(y, x);
      if (g[static_cast<size_t>(y) * w + x] >= 0.5f) gs.emplace_back(y, x);
    }
  if (ps.empty() && gs.empty()) return 0.0;
  if (ps.empty() || gs.empty()) return std::hypot(h, w);
  auto nearest = [](const std::pair<int, int>& a,
                    const std::vector<std::pair<int, int>>& set) {
    double best = 1e18;
    for (const auto& b : set) {
      const double dy = a.first - b.first, dx = a.second - b.second;
      best = std::min(best, dy * dy + dx * dx);
    }
    return std::sqrt(best);
  };
  double acc = 0.0;
  for (const auto& a : ps) acc += nearest(a, gs);
  for (const auto& b : gs) acc += nearest(b, ps);
  return acc / static_cast<double>(ps.size() + gs.size());
}

harness::TrainConfig toy_run_config(const std::string& run_dir) {
  harness::TrainConfig cfg;  // toy preset defaults (256^2, vit 192x4, C=256)
  cfg.resolution = 64;       // small frames keep audit runs fast
  cfg.synth_train = 8;
  cfg.synth_val = 2;
  cfg.synth_test = 0;
  cfg.synth_thickness = 5;
  cfg.batch_size = 2;
  cfg.epochs = 100;
  cfg.run_dir =
      (std::filesystem::temp_directory_path() / "landnet_accept" / run_dir)
          .string();
  return cfg;
}

}  // namespace

TEST_CASE("criterion 1: metric oracle equivalence") {
  const auto start = Clock::now();
  Rng rng(20240601);
  bool exact_overlap = true;
  double worst_assd = 0.0;
  for (int t = 0; t < 200; ++t) {
    auto p = random_mask(rng, 16, 16, rng.uniform(0.0, 0.4));
    auto g = random_mask(rng, 16, 16, rng.uniform(0.0, 0.4));
    long np = 0, ng = 0, inter = 0, uni = 0;
    for (size_t i = 0; i < p.size(); ++i) {
      const bool bp = p[i] >= 0.5f, bg = g[i] >= 0.5f;
      np += bp;
      ng += bg;
      inter += bp && bg;
      uni += bp || bg;
    }
    const double want_dsc =
        (np + ng == 0) ? 1.0 : 2.0 * inter / static_cast<double>(np + ng);
    const double want_iou =
        (uni == 0) ? 1.0 : inter / static_cast<double>(uni);
    exact_overlap = exact_overlap && metrics::dsc(p, g, 16, 16) == want_dsc &&
                    metrics::iou(p, g, 16, 16) == want_iou;
    worst_assd = std::max(
        worst_assd,
        std::abs(metrics::assd(p, g, 16, 16) - brute_assd(p, g, 16, 16)));
  }
  const double secs = elapsed(start);
  const bool pass = exact_overlap && worst_assd < 1e-9 && secs < 10.0;
  report(1, "metric oracle equivalence on 200 random 16x16 pairs", pass,
         "dsc/iou exact, assd max dev " + std::to_string(worst_assd) + ", " +
             std::to_string(secs) + " s");
  CHECK(exact_overlap);
  CHECK(worst_assd < 1e-9);
  CHECK(secs < 10.0);
}

TEST_CASE("criterion 2: loss gradient checks against finite differences") {
  const auto start = Clock::now();
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    auto z = testutil::random_tensor<double>({1, 1, 8, 8}, rng, -2.0, 2.0);
    std::vector<double> tgt(64);
    for (auto& v : tgt) v = rng.bernoulli(0.35) ? 1.0 : 0.0;
    worst = std::max(
        worst, testutil::grad_check(
                   [&] {
                     return ops::mean_all(
                         model::dice_per_channel(ops::sigmoid(z), tgt));
                   },
                   {z}));
    worst = std::max(
        worst, testutil::grad_check(
                   [&] {
                     return ops::mean_all(model::bce_per_channel(z, tgt));
                   },
                   {z}));
    worst = std::max(
        worst,
        testutil::grad_check(
            [&] {
              return model::segmentation_loss(z, ops::sigmoid(z), tgt).loss;
            },
            {z}));
  }
  for (int t = 0; t < 20; ++t) {
    auto p = testutil::random_tensor<double>({3, 6}, rng, -1.0, 1.0);
    auto r = testutil::random_tensor<double>({3, 6}, rng, -1.0, 1.0);
    const std::vector<bool> valid = {true, t % 2 == 0, t % 3 != 0};
    worst = std::max(worst,
                     testutil::grad_check(
                         [&] {
                           return ops::contrastive_prompt_loss(
                               p, r, valid, 0.07, true, nullptr);
                         },
                         {p, r}));
  }
  const double secs = elapsed(start);
  const bool pass = worst < 1e-4 && secs < 60.0;
  report(2, "analytic vs finite-difference gradients (dice, bce, seg, cl)",
         pass,
         "worst rel err " + std::to_string(worst) + ", " +
             std::to_string(secs) + " s");
  CHECK(worst < 1e-4);
  CHECK(secs < 60.0);
}

TEST_CASE("criterion 3: closed-form loss values") {
  // uniform similarities, three valid classes
  auto p = D::full({3, 4}, 1.0);
  auto r = D::full({3, 4}, 0.5);
  const double cl =
      ops::contrastive_prompt_loss(p, r, {true, true, true}, 0.07, true,
                                   nullptr)
          .item();
  const double cl_err = std::abs(cl - std::log(3.0));

  std::vector<double> zeros(64, 0.0), tgt(64, 0.0);
  for (int i = 0; i < 31; ++i) tgt[i] = 1.0;
  const double bce = model::bce_loss_value<double>(zeros, tgt, 8, 8);
  const double bce_err = std::abs(bce - std::log(2.0));

  std::vector<double> mask(64, 0.0);
  for (int i = 0; i < 13; ++i) mask[i] = 1.0;
  const double dice = model::dice_loss_value<double>(mask, mask, 8, 8);

  const bool pass = cl_err < 1e-6 && bce_err < 1e-9 && std::abs(dice) < 1e-9;
  report(3, "contrastive=ln3, bce=ln2 at zero logits, dice=0 on exact match",
         pass,
         "errors " + std::to_string(cl_err) + " / " + std::to_string(bce_err) +
             " / " + std::to_string(std::abs(dice)));
  CHECK(cl_err < 1e-6);
  CHECK(bce_err < 1e-9);
  CHECK(std::abs(dice) < 1e-9);
}

TEST_CASE("criterion 4: frozen-encoder audit over a 50-step run") {
  harness::TrainConfig cfg = toy_run_config("frozen_audit");
  cfg.max_steps = 50;
  cfg.lr = 1e-3;
  harness::Trainer trainer(cfg);

  auto params_before = trainer.model().parameters();
  const std::uint64_t frozen_before = frozen_checksum(params_before);
  std::vector<float> prompt_before, neck_before;
  for (auto& p : params_before) {
    if (p.name == "prompt.silhouette") prompt_before = p.tensor.values();
    if (p.name == "depth.neck.weight") neck_before = p.tensor.values();
  }
  const auto result = trainer.run();
  REQUIRE(result.steps == 50);

  auto params_after = trainer.model().parameters();
  const std::uint64_t frozen_after = frozen_checksum(params_after);
  bool prompt_moved = false, neck_moved = false;
  for (auto& p : params_after) {
    if (p.name == "prompt.silhouette")
      prompt_moved = p.tensor.values() != prompt_before;
    if (p.name == "depth.neck.weight")
      neck_moved = p.tensor.values() != neck_before;
  }
  const bool pass =
      frozen_before == frozen_after && prompt_moved && neck_moved;
  report(4, "frozen depth-trunk checksum unchanged after 50 steps", pass,
         std::string("checksum ") +
             (frozen_before == frozen_after ? "stable" : "CHANGED") +
             ", prompts " + (prompt_moved ? "moved" : "STUCK") + ", neck " +
             (neck_moved ? "moved" : "STUCK"));
  CHECK(frozen_before == frozen_after);
  CHECK(prompt_moved);
  CHECK(neck_moved);
}

TEST_CASE("criterion 5: overfit smoke test at full toy scale") {
  const auto start = Clock::now();
  harness::TrainConfig cfg;  // toy scale: 256^2, C=256, 4-block depth encoder
  cfg.synth_train = 4;
  cfg.synth_val = 0;
  cfg.synth_test = 0;
  cfg.batch_size = 1;
  cfg.lr = 1e-3;
  cfg.augment = false;  // memorization target: the exact four frames
  cfg.epochs = 60;      // 4 frames, batch 1 -> 240 steps
  cfg.max_steps = 240;  // within the 300-step budget
  cfg.run_dir =
      (std::filesystem::temp_directory_path() / "landnet_accept" / "overfit")
          .string();
  harness::Trainer trainer(cfg);
  const auto result = trainer.run();
  REQUIRE(result.steps <= 300);

  const auto metrics =
      harness::run_evaluation(trainer.model(), trainer.load_split("train"), 1);
  const double secs = elapsed(start);
  const bool pass = metrics.mean_dsc >= 95.0 && secs < 600.0;
  report(5, "train mean DSC >= 95 within 300 steps at 256^2", pass,
         "DSC " + std::to_string(metrics.mean_dsc) + " after " +
             std::to_string(result.steps) + " steps, " +
             std::to_string(secs) + " s");
  CHECK(metrics.mean_dsc >= 95.0);
  CHECK(secs < 600.0);
}

TEST_CASE("criterion 6: synthetic end-to-end training") {
  const auto start = Clock::now();
  harness::TrainConfig cfg;
  cfg.resolution = 128;  // derived property target; resolution is free
  cfg.synth_train = 200;
  cfg.synth_val = 40;
  cfg.synth_test = 0;
  cfg.epochs = 10;
  cfg.batch_size = 4;
  cfg.lr = 3e-4;
  cfg.val_every = 2;
  cfg.run_dir =
      (std::filesystem::temp_directory_path() / "landnet_accept" / "e2e")
          .string();
  harness::Trainer trainer(cfg);
  const auto result = trainer.run();
  REQUIRE(result.final_val.has_value());
  const double dsc = result.final_val->mean_dsc;
  const double secs = elapsed(start);
  const bool pass = dsc >= 50.0 && secs < 1800.0;
  report(6, "val mean DSC >= 50 after 10 epochs on 200 synthetic frames",
         pass,
         "DSC " + std::to_string(dsc) + ", " + std::to_string(secs) + " s");
  CHECK(dsc >= 50.0);
  CHECK(secs < 1800.0);
}

TEST_CASE("criterion 7: ablation closure across both tables") {
  harness::TrainConfig base = toy_run_config("ablate");
  base.synth_train = 2;
  base.synth_val = 1;
  base.epochs = 1;
  base.max_steps = 1;

  auto rows = harness::ablation_grid("designs");
  const auto t4 = harness::ablation_grid("backbones");
  rows.insert(rows.end(), t4.begin(), t4.end());
  REQUIRE(rows.size() == 11);
  rows = harness::run_ablation(base, rows, "val");

  bool all_ok = true;
  std::string failures;
  for (const auto& r : rows) {
    if (!r.ok) {
      all_ok = false;
      failures += r.name + ": " + r.error + "; ";
    }
  }
  report(7, "7 key-design variants + 4 backbone variants train and evaluate",
         all_ok, all_ok ? "11/11 variants clean" : failures);
  CHECK(all_ok);
}

TEST_CASE("criterion 8: reproducibility and checkpoint fidelity") {
  harness::TrainConfig cfg = toy_run_config("repro_a");
  cfg.max_steps = 3;
  cfg.lr = 1e-3;
  harness::Trainer a(cfg);
  const auto ra = a.run();
  cfg.run_dir = toy_run_config("repro_b").run_dir;
  harness::Trainer b(cfg);
  const auto rb = b.run();
  const double rel =
      std::abs(ra.first_step_total - rb.first_step_total) /
      std::max({std::abs(ra.first_step_total), std::abs(rb.first_step_total),
                1e-12});

  // bitwise logits across a save/load cycle
  auto frames = a.load_split("train");
  frames.resize(2);
  auto batch = model::make_batch<float>(frames);
  a.model().set_training(false);
  Tensor<float> before;
  {
    NoGradGuard ng;
    before = a.model().forward(batch.rgb, batch.depth).logits;
  }
  harness::TrainConfig cfg2 = cfg;
  cfg2.run_dir = toy_run_config("repro_c").run_dir;
  harness::Trainer c(cfg2);
  auto params = c.model().parameters();
  load_checkpoint(ra.last_checkpoint, params);
  c.model().set_training(false);
  Tensor<float> after;
  {
    NoGradGuard ng;
    after = c.model().forward(batch.rgb, batch.depth).logits;
  }
  bool bitwise = before.numel() == after.numel();
  for (std::int64_t i = 0; bitwise && i < before.numel(); ++i)
    bitwise = before.data()[i] == after.data()[i];

  const bool pass = rel <= 1e-6 && bitwise;
  report(8, "same-seed step-1 loss within 1e-6; reload preserves logits",
         pass,
         "rel diff " + std::to_string(rel) + ", logits " +
             (bitwise ? "bitwise equal" : "DIFFER"));
  CHECK(rel <= 1e-6);
  CHECK(bitwise);
}

TEST_CASE("criterion 9: dataset schema and split protocol") {
  data::SplitManifest m;
  auto add = [&](int n, const std::string& split, int patient_base,
                 int frames_per_patient) {
    for (int i = 0; i < n; ++i)
      m.entries.push_back(
          {split + "_" + std::to_string(i),
           "pat" + std::to_string(patient_base + i / frames_per_patient),
           split,
           {true, true, true}});
  };
  add(921, "train", 0, 31);
  add(122, "val", 500, 25);
  add(109, "test", 900, 28);

  bool counts_ok = false, rejected = false;
  try {
    m.validate();
    const auto c = m.counts();
    counts_ok = c.at("train") == 921 && c.at("val") == 122 &&
                c.at("test") == 109 && m.entries.size() == 1152;
  } catch (const std::exception&) {
  }
  data::SplitManifest bad = m;
  bad.entries.front().patient_id = bad.entries.back().patient_id;
  try {
    bad.validate();
  } catch (const DataError&) {
    rejected = true;
  }
  const bool pass = counts_ok && rejected;
  report(9, "921/122/109 manifest loads exactly; shared patients rejected",
         pass,
         std::string(counts_ok ? "counts exact" : "COUNTS WRONG") + ", " +
             (rejected ? "overlap rejected" : "OVERLAP ACCEPTED"));
  CHECK(counts_ok);
  CHECK(rejected);
}
