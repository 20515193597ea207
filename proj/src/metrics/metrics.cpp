#include "landnet/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "landnet/core/common.hpp"

namespace landnet::metrics {

namespace {

void require_same_shape(const std::vector<float>& a,
                        const std::vector<float>& b, int h, int w) {
  const size_t n = static_cast<size_t>(h) * w;
  if (a.size() != n || b.size() != n)
    throw ShapeError("metric inputs must both be " + std::to_string(h) + "x" +
                     std::to_string(w));
}

struct Overlap {
  std::int64_t np = 0, ng = 0, inter = 0;
};

Overlap count_overlap(const std::vector<float>& pred,
                      const std::vector<float>& gt, int h, int w) {
  Overlap o;
  const size_t n = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < n; ++i) {
    const bool p = pred[i] >= 0.5f;
    const bool g = gt[i] >= 0.5f;
    o.np += p;
    o.ng += g;
    o.inter += (p && g);
  }
  return o;
}

/// 1D squared-distance lower envelope (Felzenszwalb/Huttenlocher).
void edt_1d(const double* f, int n, double* d, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + static_cast<double>(q) * q) -
                (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
               (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + static_cast<double>(q) * q) -
           (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> squared_edt(const std::vector<std::uint8_t>& foreground,
                                int h, int w) {
  constexpr double kInf = 1e18;
  std::vector<double> grid(static_cast<size_t>(h) * w);
  for (size_t i = 0; i < grid.size(); ++i)
    grid[i] = foreground[i] ? 0.0 : kInf;

  const int n = std::max(h, w);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  // columns first, then rows over the column results
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<size_t>(y) * w + x];
    edt_1d(f.data(), h, d.data(), v.data(), z.data());
    for (int y = 0; y < h; ++y) grid[static_cast<size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = grid[static_cast<size_t>(y) * w + x];
    edt_1d(f.data(), w, d.data(), v.data(), z.data());
    for (int x = 0; x < w; ++x) grid[static_cast<size_t>(y) * w + x] = d[x];
  }
  return grid;
}

double dsc(const std::vector<float>& pred, const std::vector<float>& gt,
           int h, int w) {
  require_same_shape(pred, gt, h, w);
  const Overlap o = count_overlap(pred, gt, h, w);
  if (o.np + o.ng == 0) return 1.0;
  return 2.0 * static_cast<double>(o.inter) /
         static_cast<double>(o.np + o.ng);
}

double iou(const std::vector<float>& pred, const std::vector<float>& gt,
           int h, int w) {
  require_same_shape(pred, gt, h, w);
  const Overlap o = count_overlap(pred, gt, h, w);
  const std::int64_t uni = o.np + o.ng - o.inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.inter) / static_cast<double>(uni);
}

double assd(const std::vector<float>& pred, const std::vector<float>& gt,
            int h, int w) {
  require_same_shape(pred, gt, h, w);
  const size_t n = static_cast<size_t>(h) * w;
  std::vector<std::uint8_t> p(n), g(n);
  std::int64_t np = 0, ng = 0;
  for (size_t i = 0; i < n; ++i) {
    p[i] = pred[i] >= 0.5f;
    g[i] = gt[i] >= 0.5f;
    np += p[i];
    ng += g[i];
  }
  if (np == 0 && ng == 0) return 0.0;
  if (np == 0 || ng == 0)
    return std::hypot(static_cast<double>(h), static_cast<double>(w));

  const std::vector<double> dist_to_g = squared_edt(g, h, w);
  const std::vector<double> dist_to_p = squared_edt(p, h, w);
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (p[i]) acc += std::sqrt(dist_to_g[i]);
    if (g[i]) acc += std::sqrt(dist_to_p[i]);
  }
  return acc / static_cast<double>(np + ng);
}

void SplitEvaluator::add_frame(const std::string& frame_id, int h, int w,
                               const std::vector<float>& probs,
                               const std::vector<float>& gt,
                               const std::array<bool, 3>& present) {
  const size_t plane = static_cast<size_t>(h) * w;
  if (probs.size() != 3 * plane || gt.size() != 3 * plane)
    throw ShapeError("evaluate: frame " + frame_id +
                     " has inconsistent prediction/mask shapes");
  ++n_frames_;
  for (int c = 0; c < 3; ++c) {
    if (!present[c]) {
      ++n_skipped_;
      continue;
    }
    std::vector<float> p(probs.begin() + c * plane,
                         probs.begin() + (c + 1) * plane);
    for (auto& v : p) v = v >= static_cast<float>(threshold_) ? 1.0f : 0.0f;
    const std::vector<float> g(gt.begin() + c * plane,
                               gt.begin() + (c + 1) * plane);
    sum_dsc_[c] += dsc(p, g, h, w);
    sum_iou_[c] += iou(p, g, h, w);
    sum_assd_[c] += assd(p, g, h, w);
    ++count_[c];
  }
}

MetricsReport SplitEvaluator::report() const {
  MetricsReport r;
  r.n_frames = n_frames_;
  r.n_skipped = n_skipped_;
  int active = 0;
  for (int c = 0; c < 3; ++c) {
    auto& pc = r.per_class[c];
    pc.n = count_[c];
    if (count_[c] > 0) {
      pc.dsc = 100.0 * sum_dsc_[c] / count_[c];
      pc.iou = 100.0 * sum_iou_[c] / count_[c];
      pc.assd = sum_assd_[c] / count_[c];
      r.mean_dsc += pc.dsc;
      r.mean_iou += pc.iou;
      r.mean_assd += pc.assd;
      ++active;
    }
  }
  if (active > 0) {
    r.mean_dsc /= active;
    r.mean_iou /= active;
    r.mean_assd /= active;
  }
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  for (int c = 0; c < 3; ++c) {
    j["per_class"][kClassNames[c]] = {{"dsc", per_class[c].dsc},
                                      {"iou", per_class[c].iou},
                                      {"assd", per_class[c].assd},
                                      {"n", per_class[c].n}};
  }
  j["mean"] = {{"dsc", mean_dsc}, {"iou", mean_iou}, {"assd", mean_assd}};
  j["n_frames"] = n_frames;
  j["n_skipped"] = n_skipped;
  return j;
}

std::string MetricsReport::to_table() const {
  char line[128];
  std::string out = "class        DSC↑   IoU↑   Assd↓     n\n";
  for (int c = 0; c < 3; ++c) {
    std::snprintf(line, sizeof(line), "%-10s %6.2f %6.2f %7.2f %6d\n",
                  kClassNames[c], per_class[c].dsc, per_class[c].iou,
                  per_class[c].assd, per_class[c].n);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-10s %6.2f %6.2f %7.2f %6d\n", "mean",
                mean_dsc, mean_iou, mean_assd, n_frames);
  out += line;
  return out;
}

}  // namespace landnet::metrics
