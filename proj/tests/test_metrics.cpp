#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "landnet/core/common.hpp"
#include "landnet/metrics/metrics.hpp"

using namespace landnet;
namespace m = landnet::metrics;

namespace {

std::vector<float> make_mask(int h, int w,
                             const std::vector<std::pair<int, int>>& pts) {
  std::vector<float> v(static_cast<size_t>(h) * w, 0.0f);
  for (auto [y, x] : pts) v[static_cast<size_t>(y) * w + x] = 1.0f;
  return v;
}

// Independent oracles: plain set counting for overlap metrics and an
// all-pairs nearest-distance scan for the surface distance.
struct Counts {
  long np = 0, ng = 0, inter = 0, uni = 0;
};

Counts recount(const std::vector<float>& p, const std::vector<float>& g) {
  Counts c;
  for (size_t i = 0; i < p.size(); ++i) {
    const bool bp = p[i] >= 0.5f, bg = g[i] >= 0.5f;
    c.np += bp;
    c.ng += bg;
    c.inter += bp && bg;
    c.uni += bp || bg;
  }
  return c;
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

std::vector<float> random_mask(Rng& rng, int h, int w, double density) {
  std::vector<float> v(static_cast<size_t>(h) * w, 0.0f);
  for (auto& x : v) x = rng.bernoulli(density) ? 1.0f : 0.0f;
  return v;
}

}  // namespace

TEST_CASE("dsc hand-counted cases") {
  auto a = make_mask(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  auto b = make_mask(4, 4, {{0, 0}, {0, 1}});
  CHECK(m::dsc(a, a, 4, 4) == doctest::Approx(1.0));
  CHECK(m::dsc(a, b, 4, 4) == doctest::Approx(2.0 * 2 / 6));  // 0.6667
  auto c = make_mask(4, 4, {{3, 3}});
  CHECK(m::dsc(a, c, 4, 4) == doctest::Approx(0.0));
  auto empty = make_mask(4, 4, {});
  CHECK(m::dsc(empty, empty, 4, 4) == doctest::Approx(1.0));
  CHECK_THROWS_AS(m::dsc(a, make_mask(3, 3, {}), 4, 4), ShapeError);
}

TEST_CASE("iou hand-counted cases and dice relation") {
  auto a = make_mask(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  auto b = make_mask(4, 4, {{0, 0}, {0, 1}});
  CHECK(m::iou(a, a, 4, 4) == doctest::Approx(1.0));
  CHECK(m::iou(a, b, 4, 4) == doctest::Approx(0.5));
  // dice = 2*iou/(1+iou)
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    auto p = random_mask(rng, 8, 8, 0.3);
    auto g = random_mask(rng, 8, 8, 0.3);
    const double i = m::iou(p, g, 8, 8);
    CHECK(m::dsc(p, g, 8, 8) == doctest::Approx(2 * i / (1 + i)));
  }
}

TEST_CASE("assd basic geometry") {
  auto a = make_mask(8, 8, {{0, 0}});
  CHECK(m::assd(a, a, 8, 8) == doctest::Approx(0.0));
  auto b = make_mask(8, 8, {{3, 4}});
  CHECK(m::assd(a, b, 8, 8) == doctest::Approx(5.0));  // 3-4-5 triangle
  auto empty = make_mask(8, 8, {});
  CHECK(m::assd(empty, empty, 8, 8) == doctest::Approx(0.0));
  CHECK(m::assd(empty, b, 8, 8) == doctest::Approx(std::hypot(8.0, 8.0)));
}

TEST_CASE("assd diagonal penalty formula at 256") {
  std::vector<float> empty(256 * 256, 0.0f);
  std::vector<float> gt(256 * 256, 0.0f);
  gt[100 * 256 + 100] = 1.0f;
  CHECK(m::assd(empty, gt, 256, 256) ==
        doctest::Approx(256.0 * std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("metric symmetry and translation invariance") {
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    auto p = random_mask(rng, 12, 12, 0.2);
    auto g = random_mask(rng, 12, 12, 0.25);
    CHECK(m::assd(p, g, 12, 12) == doctest::Approx(m::assd(g, p, 12, 12)));
    CHECK(m::dsc(p, g, 12, 12) == doctest::Approx(m::dsc(g, p, 12, 12)));
    CHECK(m::iou(p, g, 12, 12) == doctest::Approx(m::iou(g, p, 12, 12)));

    // shift both by (+2,+3) into a larger canvas
    std::vector<float> ps(20 * 20, 0.0f), gs(20 * 20, 0.0f);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x) {
        ps[static_cast<size_t>(y + 2) * 20 + (x + 3)] =
            p[static_cast<size_t>(y) * 12 + x];
        gs[static_cast<size_t>(y + 2) * 20 + (x + 3)] =
            g[static_cast<size_t>(y) * 12 + x];
      }
    if (m::dsc(p, g, 12, 12) > 0) {  // both nonempty -> assd comparable
      CHECK(m::assd(ps, gs, 20, 20) == doctest::Approx(m::assd(p, g, 12, 12)));
    }
    CHECK(m::dsc(ps, gs, 20, 20) == doctest::Approx(m::dsc(p, g, 12, 12)));
    CHECK(m::iou(ps, gs, 20, 20) == doctest::Approx(m::iou(p, g, 12, 12)));
  }
}

TEST_CASE("iou <= dsc with equality only at 0 or 1") {
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    auto p = random_mask(rng, 10, 10, 0.3);
    auto g = random_mask(rng, 10, 10, 0.3);
    const double d = m::dsc(p, g, 10, 10);
    const double i = m::iou(p, g, 10, 10);
    CHECK(i <= d + 1e-12);
    if (std::abs(d - i) < 1e-12) {
      CHECK((std::abs(d) < 1e-12 || std::abs(d - 1.0) < 1e-12));
    }
  }
}

TEST_CASE("oracle equivalence on 200 random 16x16 pairs") {
  Rng rng(2024);
  const auto t0 = std::chrono::steady_clock::now();
  for (int t = 0; t < 200; ++t) {
    const double density = rng.uniform(0.0, 0.35);
    auto p = random_mask(rng, 16, 16, density);
    auto g = random_mask(rng, 16, 16, rng.uniform(0.0, 0.35));
    const Counts c = recount(p, g);
    const double want_dsc =
        (c.np + c.ng == 0) ? 1.0 : 2.0 * c.inter / double(c.np + c.ng);
    const double want_iou = (c.uni == 0) ? 1.0 : c.inter / double(c.uni);
    CHECK(m::dsc(p, g, 16, 16) == want_dsc);
    CHECK(m::iou(p, g, 16, 16) == want_iou);
    CHECK(std::abs(m::assd(p, g, 16, 16) - brute_assd(p, g, 16, 16)) < 1e-9);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(secs < 10.0);
}

TEST_CASE("split evaluator: perfect prediction and all-background") {
  Rng rng(31);
  m::SplitEvaluator perfect(0.5);
  m::SplitEvaluator blank(0.5);
  const int h = 32, w = 32;
  for (int f = 0; f < 5; ++f) {
    std::vector<float> gt(3 * h * w, 0.0f);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 40; ++i)
        gt[static_cast<size_t>(c) * h * w + rng.uniform_int(0, h * w - 1)] =
            1.0f;
    perfect.add_frame("f" + std::to_string(f), h, w, gt, gt,
                      {true, true, true});
    std::vector<float> zeros(3 * h * w, 0.0f);
    blank.add_frame("f" + std::to_string(f), h, w, zeros, gt,
                    {true, true, true});
  }
  const auto rp = perfect.report();
  CHECK(rp.mean_dsc == doctest::Approx(100.0));
  CHECK(rp.mean_iou == doctest::Approx(100.0));
  CHECK(rp.mean_assd == doctest::Approx(0.0));
  CHECK(rp.n_frames == 5);
  CHECK(rp.n_skipped == 0);

  const auto rb = blank.report();
  CHECK(rb.mean_dsc == doctest::Approx(0.0));
  CHECK(rb.mean_iou == doctest::Approx(0.0));
  CHECK(rb.mean_assd == doctest::Approx(std::hypot(32.0, 32.0)));
}

TEST_CASE("split evaluator: absent classes are skipped, not zeroed") {
  const int h = 8, w = 8;
  std::vector<float> gt(3 * h * w, 0.0f);
  gt[0] = 1.0f;  // silhouette only
  m::SplitEvaluator ev(0.5);
  ev.add_frame("a", h, w, gt, gt, {true, false, false});
  const auto r = ev.report();
  CHECK(r.per_class[0].n == 1);
  CHECK(r.per_class[1].n == 0);
  CHECK(r.per_class[2].n == 0);
  CHECK(r.n_skipped == 2);
  CHECK(r.mean_dsc == doctest::Approx(100.0));  // mean over active classes
}

TEST_CASE("report serialization carries the table-column order") {
  m::MetricsReport r;
  r.per_class[0] = {63.5, 48.7, 59.4, 10};
  const auto j = r.to_json();
  CHECK(j["per_class"]["silhouette"]["dsc"] == doctest::Approx(63.5));
  const std::string table = m::MetricsReport(r).to_table();
  const auto pd = table.find("DSC");
  const auto pi = table.find("IoU");
  const auto pa = table.find("Assd");
  CHECK(pd != std::string::npos);
  CHECK(pd < pi);
  CHECK(pi < pa);
}
