#include "landnet/data/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace landnet::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct OrganShape {
  double cx, cy;        // center, pixels
  double ax, ay;        // semi-axes, pixels
  double rot;           // rotation, radians
  double amp[4];        // boundary deformation harmonics
  double phase[4];

  // radial modulation of the ellipse boundary
  double radius_scale(double psi) const {
    double r = 1.0;
    for (int k = 0; k < 4; ++k) r += amp[k] * std::cos((k + 1) * psi + phase[k]);
    return r;
  }

  // boundary point in image coordinates for parameter psi
  void boundary(double psi, double* x, double* y) const {
    const double r = radius_scale(psi);
    const double ex = ax * r * std::cos(psi);
    const double ey = ay * r * std::sin(psi);
    *x = cx + ex * std::cos(rot) - ey * std::sin(rot);
    *y = cy + ex * std::sin(rot) + ey * std::cos(rot);
  }

  // relative radial position: < 1 inside, 1 on the boundary
  double rho(double px, double py) const {
    const double dx = px - cx, dy = py - cy;
    const double ux = dx * std::cos(-rot) - dy * std::sin(-rot);
    const double uy = dx * std::sin(-rot) + dy * std::cos(-rot);
    const double ex = ux / ax, ey = uy / ay;
    const double rr = std::sqrt(ex * ex + ey * ey);
    if (rr < 1e-9) return 0.0;
    const double psi = std::atan2(ey, ex);
    return rr / radius_scale(psi);
  }
};

void stamp_disk(std::vector<float>& plane, int h, int w, double cx, double cy,
                double radius, float value) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + radius)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r2)
        plane[static_cast<size_t>(y) * w + x] = value;
    }
}

void blend_disk(std::vector<float>& rgb, int h, int w, double cx, double cy,
                double radius, float r, float g, float b, float alpha) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + radius)));
  const double r2 = radius * radius;
  const float target[3] = {r, g, b};
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy > r2) continue;
      for (int c = 0; c < 3; ++c) {
        float& px = rgb[c * plane + static_cast<size_t>(y) * w + x];
        px = (1.0f - alpha) * px + alpha * target[c];
      }
    }
}

}  // namespace

FrameSample generate_synthetic(const SynthConfig& cfg, int index) {
  cfg.validate();
  if (index < 0 || index >= cfg.count)
    throw std::out_of_range("generate_synthetic: index " +
                            std::to_string(index) + " outside [0, " +
                            std::to_string(cfg.count) + ")");
  Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(index));
  const int res = cfg.resolution;
  const double r = static_cast<double>(res);
  const std::size_t plane = static_cast<std::size_t>(res) * res;

  FrameSample s;
  s.frame_id = "synth_" + std::to_string(cfg.seed) + "_" +
               std::to_string(index);
  s.h = s.w = res;
  s.rgb.assign(3 * plane, 0.0f);
  s.depth.assign(plane, 0.0f);
  s.masks.assign(3 * plane, 0.0f);

  OrganShape organ;
  organ.cx = r * rng.uniform(0.42, 0.58);
  organ.cy = r * rng.uniform(0.48, 0.62);
  organ.ax = r * rng.uniform(0.26, 0.36);
  organ.ay = r * rng.uniform(0.19, 0.28);
  organ.rot = rng.uniform(-0.25, 0.25);
  for (int k = 0; k < 4; ++k) {
    organ.amp[k] =
        cfg.deformation_amplitude * rng.uniform(0.015, 0.05) / (k + 1);
    organ.phase[k] = rng.uniform(0.0, 2.0 * kPi);
  }

  // background texture: tinted base plus two soft gradients
  const double base[3] = {rng.uniform(0.30, 0.40), rng.uniform(0.34, 0.44),
                          rng.uniform(0.32, 0.42)};
  const double gfx = rng.uniform(0.5, 2.0), gfy = rng.uniform(0.5, 2.0);
  const double gph = rng.uniform(0.0, 2.0 * kPi);
  const double organ_base[3] = {rng.uniform(0.50, 0.62),
                                rng.uniform(0.20, 0.28),
                                rng.uniform(0.16, 0.24)};

  for (int y = 0; y < res; ++y) {
    for (int x = 0; x < res; ++x) {
      const std::size_t i = static_cast<size_t>(y) * res + x;
      const double wave =
          0.05 * std::sin(2.0 * kPi * (gfx * x + gfy * y) / r + gph);
      const double rho = organ.rho(x, y);
      double col[3];
      double depth;
      if (rho <= 1.0) {
        const double shade = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        col[0] = organ_base[0] + 0.22 * shade;
        col[1] = organ_base[1] + 0.10 * shade;
        col[2] = organ_base[2] + 0.04 * shade;
        if (rho > 0.92) {  // darker band just inside the visible boundary
          const double f = 0.55 + 0.45 * (1.0 - (rho - 0.92) / 0.08);
          for (double& c : col) c *= f;
        }
        depth = 0.55 + 0.40 * shade;
      } else {
        for (int c = 0; c < 3; ++c) col[c] = base[c] + wave;
        depth = 0.28 + 0.12 * (static_cast<double>(y) / r);
      }
      for (int c = 0; c < 3; ++c) {
        const double noisy = col[c] + rng.uniform(-0.02, 0.02);
        s.rgb[c * plane + i] =
            static_cast<float>(std::clamp(noisy, 0.0, 1.0));
      }
      s.depth[i] = static_cast<float>(depth + rng.uniform(-0.015, 0.015));
    }
  }

  // landmark curves along the boundary, stamped as disks of the configured
  // thickness
  const double half = cfg.curve_thickness_px / 2.0;
  const int samples = 8 * res;
  double top_x = organ.cx, top_y = 1e18;
  std::vector<float> sil(plane, 0.0f), lig(plane, 0.0f), rid(plane, 0.0f);
  for (int i = 0; i < samples; ++i) {
    const double psi = 2.0 * kPi * i / samples;
    double bx, by;
    organ.boundary(psi, &bx, &by);
    if (bx < -half || bx >= r + half || by < -half || by >= r + half) continue;
    stamp_disk(sil, res, res, bx, by, half, 1.0f);
    // lower anterior arc: outward direction has a clear downward component
    const double nx = bx - organ.cx, ny = by - organ.cy;
    const double nn = std::sqrt(nx * nx + ny * ny);
    if (nn > 1e-9 && ny / nn > 0.35) {
      stamp_disk(rid, res, res, bx, by, half, 1.0f);
      blend_disk(s.rgb, res, res, bx, by, half, 0.30f, 0.07f, 0.07f, 0.40f);
    }
    if (by < top_y) {
      top_y = by;
      top_x = bx;
    }
  }

  // ligament: a near-vertical seam from the top boundary into the interior
  const double seam_len = rng.uniform(0.65, 0.95) * organ.ay;
  const double seam_tilt = rng.uniform(-0.18, 0.18);
  const double seam_bow = rng.uniform(-0.06, 0.06) * r;
  const int seam_steps = std::max(16, static_cast<int>(seam_len * 2));
  for (int i = 0; i <= seam_steps; ++i) {
    const double t = static_cast<double>(i) / seam_steps;
    const double px = top_x + seam_len * t * std::sin(seam_tilt) +
                      seam_bow * std::sin(kPi * t);
    const double py = top_y + seam_len * t * std::cos(seam_tilt);
    stamp_disk(lig, res, res, px, py, half, 1.0f);
    blend_disk(s.rgb, res, res, px, py, half, 0.85f, 0.80f, 0.70f, 0.45f);
    // shallow crease in the height field along the seam
    stamp_disk(s.depth, res, res, px, py, half,
               static_cast<float>(0.55 + 0.40 * std::sqrt(std::max(
                                             0.0, 1.0 - 0.8 * t * t)) -
                                  0.07));
  }

  // occasional occluding tool
  if (rng.bernoulli(0.3)) {
    const int tw = static_cast<int>(r * rng.uniform(0.08, 0.2));
    const int th = static_cast<int>(r * rng.uniform(0.25, 0.55));
    const int tx = rng.uniform_int(0, res - tw - 1);
    const int ty = rng.uniform_int(0, res - th - 1);
    for (int y = ty; y < ty + th; ++y) {
      for (int x = tx; x < tx + tw; ++x) {
        const std::size_t i = static_cast<size_t>(y) * res + x;
        const double edge =
            0.12 * std::abs(x - (tx + tw / 2.0)) / (tw / 2.0 + 1e-9);
        s.rgb[0 * plane + i] = static_cast<float>(0.22 - edge);
        s.rgb[1 * plane + i] = static_cast<float>(0.23 - edge);
        s.rgb[2 * plane + i] = static_cast<float>(0.26 - edge);
        s.depth[i] = 0.99f;
        sil[i] = lig[i] = rid[i] = 0.0f;
      }
    }
  }

  std::copy(sil.begin(), sil.end(), s.masks.begin());
  std::copy(lig.begin(), lig.end(), s.masks.begin() + plane);
  std::copy(rid.begin(), rid.end(), s.masks.begin() + 2 * plane);

  // normalize depth to [0,1] and refresh presence flags
  float dmin = s.depth[0], dmax = s.depth[0];
  for (float v : s.depth) {
    dmin = std::min(dmin, v);
    dmax = std::max(dmax, v);
  }
  const float span = dmax - dmin;
  for (float& v : s.depth) v = span > 1e-12f ? (v - dmin) / span : 0.5f;

  for (int c = 0; c < 3; ++c) {
    bool any = false;
    const float* mv = s.mask(c);
    for (std::size_t i = 0; i < plane && !any; ++i) any = mv[i] != 0.0f;
    s.present[c] = any;
  }
  return s;
}

}  // namespace landnet::data
