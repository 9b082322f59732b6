// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "partsync/par_mask.hpp"

using namespace partsync::par;

namespace {

Keypoint kp(double x, double y, double c, Region r) { return {x, y, c, r}; }

// Brute-force disc membership over every pixel center.
BoolMap oracle_circles(const KeypointSet& centers, double r, int W, int H) {
  BoolMap m(W, H, 0);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (const auto& c : centers) {
        if (std::hypot(x - c.x, y - c.y) <= r) m.at(x, y) = 1;
      }
    }
  }
  return m;
}

// Dense 2D Gaussian convolution with zero padding and a normalized truncated kernel.
WeightMap oracle_blur(const WeightMap& in, double sigma) {
  const int R = static_cast<int>(std::ceil(3 * sigma));
  double norm = 0;
  for (int dy = -R; dy <= R; ++dy) {
    for (int dx = -R; dx <= R; ++dx) norm += std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
  }
  WeightMap out(in.width, in.height, 0.0);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double acc = 0;
      for (int dy = -R; dy <= R; ++dy) {
        for (int dx = -R; dx <= R; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= in.width || yy >= in.height) continue;
          acc += in.at(xx, yy) * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
        }
      }
      out.at(x, y) = acc / norm;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("filter_reliable keeps confidences strictly above tau") {
  const KeypointSet set = {kp(1, 1, 0.9, Region::hand), kp(2, 2, 0.7, Region::face)};
  const auto kept = filter_reliable(set, 0.8);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].confidence == 0.9);
  CHECK(kept[0].region == Region::hand);
  CHECK(filter_reliable(set, 0.0).size() == 2);
  CHECK(filter_reliable(set, 1.0).empty());
}

TEST_CASE("single hand circle has area close to pi r^2") {
  const auto area = build_awareness_area({kp(50, 50, 1.0, Region::hand)}, 0.5, 10, 101, 101);
  double n = 0;
  for (auto v : area.hand_face.data) n += v;
  CHECK(std::abs(n - std::numbers::pi * 100) / (std::numbers::pi * 100) < 0.02);
  for (auto v : area.body.data) CHECK(v == 0);
}

TEST_CASE("body rectangle spans the extreme body keypoints") {
  const auto area = build_awareness_area({kp(10, 10, 1, Region::body), kp(90, 40, 1, Region::body)}, 0.5, 3, 100, 60);
  for (int y = 0; y < 60; ++y) {
    for (int x = 0; x < 100; ++x) {
      const bool inside = x >= 10 && x <= 90 && y >= 10 && y <= 40;
      REQUIRE(area.body.at(x, y) == (inside ? 1 : 0));
    }
  }
}

TEST_CASE("random reliable keypoints match the per-pixel membership oracle") {
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> u(0, 63);
  for (int trial = 0; trial < 10; ++trial) {
    KeypointSet set;
    for (int i = 0; i < 5; ++i) set.push_back(kp(u(rng), u(rng), 0.95, i % 2 ? Region::hand : Region::face));
    const auto area = build_awareness_area(set, 0.8, 6.5, 64, 64);
    const auto want = oracle_circles(set, 6.5, 64, 64);
    CHECK((area.hand_face.data == want.data));
  }
}

TEST_CASE("no reliable keypoints yields the all-ones mask") {
  const KeypointSet set = {kp(4, 4, 0.3, Region::hand), kp(8, 8, 0.5, Region::body)};
  const auto m = build_reweight_mask(set, ParParams{0.8, 4, 10, 2, 1.5}, 16, 16);
  for (auto v : m.data) CHECK(v == 1.0);
}

TEST_CASE("single keypoint mask matches the dense paint-blur-scale-floor oracle") {
  const ParParams p{0.8, 3.0, 10.0, 2.0, 1.0};
  const auto k = kp(7.3, 8.6, 0.9, Region::hand);
  const auto got = build_reweight_mask({k}, p, 16, 16);
  WeightMap paint(16, 16, 0.0);
  const auto disc = oracle_circles({k}, p.radius, 16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) paint.at(x, y) = disc.at(x, y) ? 0.9 : 0.0;
  }
  const auto smooth = oracle_blur(paint, p.blur_sigma);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const double want = disc.at(x, y) ? std::max(1.0, 10.0 * smooth.at(x, y)) : 1.0;
      REQUIRE(got.at(x, y) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("default weights put omega2 on the torso and the maximum in hand circles") {
  const KeypointSet pose = {kp(20, 20, 0.95, Region::body), kp(44, 50, 0.95, Region::body),
                            kp(10, 30, 0.95, Region::hand), kp(54, 30, 0.95, Region::hand),
                            kp(32, 12, 0.95, Region::face)};
  const auto m = build_reweight_mask(pose, ParParams{}, 64, 64);
  CHECK(m.at(32, 45) == 2.0);
  CHECK(m.at(0, 63) == 1.0);
  double peak = 0;
  int px = 0, py = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (m.at(x, y) > peak) peak = m.at(x, y), px = x, py = y;
    }
  }
  CHECK(peak > 2.0);
  const auto area = build_awareness_area(pose, 0.8, 10, 64, 64);
  CHECK(area.hand_face.at(px, py) == 1);
}

TEST_CASE("invalid re-weighting parameters are rejected") {
  CHECK_THROWS(build_reweight_mask({}, ParParams{0.8, 4, 10, 2, 0.0}, 8, 8));
  CHECK_THROWS(build_reweight_mask({}, ParParams{0.8, 4, 1, 2, 1.0}, 8, 8));
  CHECK_THROWS(build_awareness_area({}, 0.8, 0.0, 8, 8));
}

TEST_CASE("off-frame keypoints are clamped to the border") {
  const auto area = build_awareness_area({kp(-30, 5, 1, Region::hand)}, 0.5, 1.0, 16, 16);
  CHECK(area.hand_face.at(0, 5) == 1);
}

TEST_CASE("downsampling: constant, block-aligned and random maps") {
  ReweightMask ones{1, 64, 64, std::vector<double>(64 * 64, 1.0)};
  const auto d = downsample_mask(ones, 8);
  CHECK(d.width == 8);
  for (auto v : d.weights) CHECK(v == 1.0);

  auto block = ones;
  for (int y = 8; y < 16; ++y) {
    for (int x = 16; x < 24; ++x) block.at(0, x, y) = 10.0;
  }
  const auto db = downsample_mask(block, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) CHECK(db.at(0, x, y) == (x == 2 && y == 1 ? 10.0 : 1.0));
  }

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1, 5);
  ReweightMask r{2, 32, 32, {}};
  for (int i = 0; i < 2 * 32 * 32; ++i) r.weights.push_back(u(rng));
  const auto dr = downsample_mask(r, 4);
  double mean_in = 0, mean_out = 0;
  for (auto v : r.weights) mean_in += v / r.weights.size();
  for (auto v : dr.weights) mean_out += v / dr.weights.size();
  CHECK(mean_out == doctest::Approx(mean_in).epsilon(1e-9));
  for (int f = 0; f < 2; ++f) {
    for (int by = 0; by < 8; ++by) {
      for (int bx = 0; bx < 8; ++bx) {
        double s = 0;
        for (int y = 0; y < 4; ++y) {
          for (int x = 0; x < 4; ++x) s += r.at(f, bx * 4 + x, by * 4 + y);
        }
        REQUIRE(dr.at(f, bx, by) == doctest::Approx(s / 16).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS(downsample_mask(r, 5));
}

TEST_CASE("property: raising tau never enlarges an awareness area") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 31), c(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    KeypointSet set;
    for (int i = 0; i < 8; ++i) set.push_back(kp(u(rng), u(rng), c(rng), static_cast<Region>(i % 3)));
    const double lo = c(rng), hi = lo + (1 - lo) * c(rng);
    const auto a = build_awareness_area(set, lo, 3, 32, 32);
    const auto b = build_awareness_area(set, hi, 3, 32, 32);
    for (std::size_t i = 0; i < a.body.data.size(); ++i) {
      REQUIRE(b.hand_face.data[i] <= a.hand_face.data[i]);
      REQUIRE(b.body.data[i] <= a.body.data[i]);
    }
  }
}

TEST_CASE("property: unit weights give the all-ones map and masks stay at least 1") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 15), c(0.81, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const KeypointSet one = {kp(u(rng), u(rng), c(rng), Region::hand), kp(u(rng), u(rng), c(rng), Region::body)};
    const auto m = build_reweight_mask(one, ParParams{0.8, 3, 1, 1, 1.0}, 16, 16);
    for (auto v : m.data) REQUIRE(v == 1.0);
    const auto d = build_reweight_mask(one, ParParams{0.8, 3, 10, 2, 1.0}, 16, 16);
    for (auto v : d.data) REQUIRE(v >= 1.0);
  }
}

TEST_CASE("property: mask construction is deterministic") {
  PoseSequence pose{{{kp(3, 4, 0.9, Region::face), kp(9, 9, 0.85, Region::body), kp(12, 2, 0.9, Region::body)}},
                    16, 16, 25};
  const auto a = build_reweight_masks(pose, ParParams{0.8, 3, 10, 2, 1.5});
  const auto b = build_reweight_masks(pose, ParParams{0.8, 3, 10, 2, 1.5});
  CHECK((a.weights == b.weights));
}
