// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "partsync/audio.hpp"

namespace partsync {

namespace {

using Color = std::array<float, 3>;

struct Canvas {
  int w, h;
  std::vector<float> px;  // [3, h, w]

  Canvas(int width, int height, Color bg) : w(width), h(height), px(3 * static_cast<std::size_t>(width) * height) {
    for (int c = 0; c < 3; ++c) std::fill_n(px.begin() + static_cast<std::ptrdiff_t>(c) * w * h, w * h, bg[c]);
  }

  void blend(int x, int y, const Color& col, double alpha) {
    if (alpha <= 0) return;
    alpha = std::min(alpha, 1.0);
    for (int c = 0; c < 3; ++c) {
      auto& v = px[(static_cast<std::size_t>(c) * h + y) * w + x];
      v = static_cast<float>(v * (1 - alpha) + col[c] * alpha);
    }
  }

  void segment(double x0, double y0, double x1, double y1, double half_width, const Color& col) {
    const double dx = x1 - x0, dy = y1 - y0, len2 = dx * dx + dy * dy;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double u = len2 > 0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        const double d = std::hypot(x - (x0 + u * dx), y - (y0 + u * dy));
        blend(x, y, col, half_width + 0.5 - d);
      }
    }
  }

  void ellipse(double cx, double cy, double rx, double ry, const Color& col) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double r = std::hypot((x - cx) / rx, (y - cy) / ry);
        blend(x, y, col, (1.0 - r) * std::min(rx, ry) + 0.5);
      }
    }
  }
};

}  // namespace

int samples_per_frame(const SyntheticOptions& options) {
  const double spf = options.sample_rate / options.fps;
  if (std::abs(spf - std::round(spf)) > 1e-9) {
    throw std::invalid_argument("sample_rate / fps must be an integer number of samples");
  }
  return static_cast<int>(std::lround(spf));
}

SyntheticClip make_synthetic_clip(const SyntheticOptions& options, int index) {
  if (options.frames < 1 || options.height < 16 || options.width < 16) {
    throw std::invalid_argument("synthetic clip needs at least one 16x16 frame");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto uni = [&](double a, double b) { return a + (b - a) * U(rng); };

  const int Fr = options.frames, H = options.height, W = options.width;
  const int spf = samples_per_frame(options);
  SyntheticClip clip;

  // Audio: voiced bursts on a harmonic carrier, silence otherwise.
  const double f0 = uni(120.0, 300.0);
  clip.audio.resize(static_cast<std::size_t>(Fr) * spf);
  for (int f = 0; f < Fr; ++f) {
    const double amp = U(rng) < 0.5 ? uni(0.02, 0.08) : uni(0.3, 0.6);
    for (int s = 0; s < spf; ++s) {
      const double tsec = static_cast<double>(f * spf + s) / options.sample_rate;
      const double ph = 2 * std::numbers::pi * f0 * tsec;
      const double x = amp * (0.8 * std::sin(ph) + 0.2 * std::sin(2 * ph)) + 0.005 * uni(-1.0, 1.0);
      clip.audio[static_cast<std::size_t>(f) * spf + s] =
          static_cast<std::int16_t>(std::clamp(std::lround(x * 32767.0), -32768L, 32767L));
    }
  }
  WavData wav{options.sample_rate, clip.audio};
  const auto samples = wav.as_float();
  clip.energies = frame_energies(samples, options.sample_rate, options.fps, Fr);

  // Figure layout, jittered per clip.
  const double cx = W / 2.0 + uni(-1.0, 1.0);
  const double cy = 7.0 * H / 32.0 + uni(-1.0, 1.0);
  const double s = H / 32.0;
  const Color bg{static_cast<float>(uni(0.05, 0.2)), static_cast<float>(uni(0.05, 0.2)),
                 static_cast<float>(uni(0.05, 0.2))};
  const Color body{static_cast<float>(uni(0.5, 1.0)), static_cast<float>(uni(0.5, 1.0)),
                   static_cast<float>(uni(0.3, 0.7))};
  const Color skin{0.95f, 0.75f, 0.6f};
  const Color mouth_col{0.25f, 0.05f, 0.05f};
  constexpr double lo = 0.2, hi = 2.6, bend = 0.6;
  double theta_l = uni(lo + 0.3, hi - 0.3), theta_r = uni(lo + 0.3, hi - 0.3);
  double dir_l = U(rng) < 0.5 ? 1 : -1, dir_r = U(rng) < 0.5 ? 1 : -1;

  clip.frames = torch::empty({Fr, 3, H, W});
  clip.pose.width = W;
  clip.pose.height = H;
  clip.pose.fps = options.fps;
  for (int f = 0; f < Fr; ++f) {
    const double speed = options.speed_gain * clip.energies[f];
    clip.limb_speed.push_back(speed);
    const auto advance = [&](double& theta, double& dir) {
      if (theta + dir * speed > hi || theta + dir * speed < lo) dir = -dir;
      theta += dir * speed;
    };
    advance(theta_l, dir_l);
    advance(theta_r, dir_r);

    const double neck_y = cy + 4.5 * s, sh_y = cy + 6 * s, hip_y = cy + 15 * s;
    const double upper = 6 * s, fore = 5 * s;
    const double sl_x = cx - 3 * s, sr_x = cx + 3 * s;
    const double el_x = sl_x - upper * std::sin(theta_l), el_y = sh_y + upper * std::cos(theta_l);
    const double er_x = sr_x + upper * std::sin(theta_r), er_y = sh_y + upper * std::cos(theta_r);
    const double hl_x = el_x - fore * std::sin(theta_l + bend), hl_y = el_y + fore * std::cos(theta_l + bend);
    const double hr_x = er_x + fore * std::sin(theta_r + bend), hr_y = er_y + fore * std::cos(theta_r + bend);
    const double kl_x = cx - 2.5 * s, kr_x = cx + 2.5 * s, k_y = cy + 20 * s;
    const double fl_x = cx - 3.5 * s, fr_x = cx + 3.5 * s, f_y = std::min(cy + 24 * s, H - 1.0);
    const double mouth_open = std::min(3.0, 8.0 * std::sqrt(clip.energies[f])) * s;

    Canvas cv(W, H, bg);
    cv.segment(cx, hip_y, kl_x, k_y, 0.7, body);
    cv.segment(kl_x, k_y, fl_x, f_y, 0.7, body);
    cv.segment(cx, hip_y, kr_x, k_y, 0.7, body);
    cv.segment(kr_x, k_y, fr_x, f_y, 0.7, body);
    cv.segment(cx, neck_y, cx, hip_y, 1.0, body);
    cv.segment(sl_x, sh_y, sr_x, sh_y, 0.7, body);
    cv.segment(sl_x, sh_y, el_x, el_y, 0.7, body);
    cv.segment(el_x, el_y, hl_x, hl_y, 0.7, body);
    cv.segment(sr_x, sh_y, er_x, er_y, 0.7, body);
    cv.segment(er_x, er_y, hr_x, hr_y, 0.7, body);
    cv.ellipse(cx, cy, 4 * s, 4 * s, skin);
    cv.ellipse(cx, cy + 2 * s, 1.6 * s, 0.3 * s + mouth_open / 2, mouth_col);

    auto frame = torch::from_blob(cv.px.data(), {3, H, W}, torch::kFloat32);
    clip.frames[f].copy_(torch::round(frame.clamp(0, 1) * 255) / 255);

    par::KeypointSet kps;
    const auto kp = [&](double x, double y, par::Region r) { kps.push_back({x, y, uni(0.5, 1.0), r}); };
    kp(cx, cy, par::Region::face);
    kp(cx, cy + 2 * s, par::Region::face);
    kp(hl_x, hl_y, par::Region::hand);
    kp(hr_x, hr_y, par::Region::hand);
    kp(cx, neck_y, par::Region::body);
    kp(sl_x, sh_y, par::Region::body);
    kp(sr_x, sh_y, par::Region::body);
    kp(el_x, el_y, par::Region::body);
    kp(er_x, er_y, par::Region::body);
    kp(cx, hip_y, par::Region::body);
    kp(kl_x, k_y, par::Region::body);
    kp(kr_x, k_y, par::Region::body);
    kp(fl_x, f_y, par::Region::body);
    clip.pose.frames.push_back(std::move(kps));
    clip.faces.push_back(FaceBox{f, cx - 4.5 * s, cy - 4.5 * s, cx + 4.5 * s, cy + 4.5 * s});
  }
  return clip;
}

std::vector<int> derangement(int n, std::mt19937_64& rng) {
  if (n < 2) throw std::invalid_argument("derangement needs at least two elements");
  std::vector<int> p(n);
  for (;;) {
    for (int i = 0; i < n; ++i) p[i] = i;
    std::shuffle(p.begin(), p.end(), rng);
    bool fixed = false;
    for (int i = 0; i < n && !fixed; ++i) fixed = p[i] == i;
    if (!fixed) return p;
  }
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need equal series of length >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace partsync
