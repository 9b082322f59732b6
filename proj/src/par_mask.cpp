// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/par_mask.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace partsync::par {

std::string_view to_string(Region region) {
  switch (region) {
    case Region::hand: return "hand";
    case Region::face: return "face";
    case Region::body: return "body";
  }
  return "body";
}

Region region_from_string(std::string_view name) {
  if (name == "hand") return Region::hand;
  if (name == "face") return Region::face;
  if (name == "body") return Region::body;
  throw std::invalid_argument("unknown keypoint region '" + std::string(name) + "'");
}

KeypointSet filter_reliable(const KeypointSet& frame, double tau) {
  KeypointSet out;
  std::copy_if(frame.begin(), frame.end(), std::back_inserter(out),
               [tau](const Keypoint& k) { return k.confidence > tau; });
  return out;
}

namespace {

Keypoint clamped(Keypoint k, int width, int height) {
  k.x = std::clamp(k.x, 0.0, static_cast<double>(width - 1));
  k.y = std::clamp(k.y, 0.0, static_cast<double>(height - 1));
  return k;
}

// Visits every pixel whose center lies inside the disc.
template <typename Fn>
void for_each_in_circle(const Keypoint& c, double radius, int width, int height, Fn&& fn) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x - radius)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(c.x + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y - radius)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(c.y + radius)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - c.x;
      const double dy = y - c.y;
      if (dx * dx + dy * dy <= r2) fn(x, y);
    }
  }
}

void check_shape(int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("frame size must be positive");
}

}  // namespace

AwarenessArea build_awareness_area(const KeypointSet& frame, double tau, double radius, int width,
                                   int height) {
  check_shape(width, height);
  if (!(radius > 0)) throw std::invalid_argument("awareness radius must be positive");
  AwarenessArea area{BoolMap(width, height, 0), BoolMap(width, height, 0)};

  double xmin = 0, xmax = -1, ymin = 0, ymax = -1;
  bool any_body = false;
  for (const auto& raw : filter_reliable(frame, tau)) {
    const auto k = clamped(raw, width, height);
    if (k.region == Region::body) {
      if (!any_body) {
        xmin = xmax = k.x;
        ymin = ymax = k.y;
        any_body = true;
      } else {
        xmin = std::min(xmin, k.x);
        xmax = std::max(xmax, k.x);
        ymin = std::min(ymin, k.y);
        ymax = std::max(ymax, k.y);
      }
    } else {
      for_each_in_circle(k, radius, width, height, [&](int x, int y) { area.hand_face.at(x, y) = 1; });
    }
  }
  if (any_body) {
    for (int y = static_cast<int>(std::ceil(ymin)); y <= static_cast<int>(std::floor(ymax)); ++y) {
      for (int x = static_cast<int>(std::ceil(xmin)); x <= static_cast<int>(std::floor(xmax)); ++x) {
        area.body.at(x, y) = 1;
      }
    }
  }
  return area;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("blur sigma must be positive");
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * half + 1);
  double sum = 0;
  for (int i = -half; i <= half; ++i) {
    k[i + half] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + half];
  }
  for (auto& v : k) v /= sum;
  return k;
}

WeightMap gaussian_blur(const WeightMap& map, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int half = static_cast<int>(k.size() / 2);
  WeightMap tmp(map.width, map.height, 0.0);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      double acc = 0;
      for (int i = -half; i <= half; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < map.width) acc += k[i + half] * map.at(xx, y);
      }
      tmp.at(x, y) = acc;
    }
  }
  WeightMap out(map.width, map.height, 0.0);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      double acc = 0;
      for (int i = -half; i <= half; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < map.height) acc += k[i + half] * tmp.at(x, yy);
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

WeightMap build_reweight_mask(const KeypointSet& frame, const ParParams& params, int width,
                              int height) {
  check_shape(width, height);
  if (!(params.blur_sigma > 0)) throw std::invalid_argument("blur sigma must be positive");
  if (!(params.omega1 >= params.omega2 && params.omega2 >= 1)) {
    throw std::invalid_argument("re-weighting requires omega1 >= omega2 >= 1");
  }
  const auto area = build_awareness_area(frame, params.tau, params.radius, width, height);

  // Each reliable hand/face keypoint paints its confidence inside its circle.
  WeightMap field(width, height, 0.0);
  for (const auto& raw : filter_reliable(frame, params.tau)) {
    if (raw.region == Region::body) continue;
    const auto k = clamped(raw, width, height);
    for_each_in_circle(k, params.radius, width, height,
                       [&](int x, int y) { field.at(x, y) += k.confidence; });
  }
  const auto smooth = gaussian_blur(field, params.blur_sigma);

  WeightMap out(width, height, 1.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (area.hand_face.at(x, y)) {
        out.at(x, y) = std::max(1.0, smooth.at(x, y) * params.omega1);
      } else if (area.body.at(x, y)) {
        out.at(x, y) = params.omega2;
      }
    }
  }
  return out;
}

ReweightMask build_reweight_masks(const PoseSequence& pose, const ParParams& params) {
  ReweightMask mask;
  mask.frames = static_cast<int>(pose.frames.size());
  mask.width = pose.width;
  mask.height = pose.height;
  mask.weights.reserve(static_cast<std::size_t>(mask.frames) * pose.width * pose.height);
  for (const auto& frame : pose.frames) {
    const auto w = build_reweight_mask(frame, params, pose.width, pose.height);
    mask.weights.insert(mask.weights.end(), w.data.begin(), w.data.end());
  }
  return mask;
}

ReweightMask downsample_mask(const ReweightMask& mask, int factor) {
  if (factor <= 0 || mask.width % factor != 0 || mask.height % factor != 0) {
    throw std::invalid_argument("mask size must be divisible by the pooling factor");
  }
  ReweightMask out;
  out.frames = mask.frames;
  out.width = mask.width / factor;
  out.height = mask.height / factor;
  out.weights.assign(static_cast<std::size_t>(out.frames) * out.width * out.height, 0.0);
  const double inv = 1.0 / (factor * factor);
  for (int f = 0; f < mask.frames; ++f) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        double acc = 0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) acc += mask.at(f, x * factor + dx, y * factor + dy);
        }
        out.at(f, x, y) = acc * inv;
      }
    }
  }
  return out;
}

}  // namespace partsync::par
