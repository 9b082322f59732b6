// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace partsync::par {

enum class Region : std::uint8_t { hand, face, body };

std::string_view to_string(Region region);
/// Throws std::invalid_argument for anything other than hand/face/body.
Region region_from_string(std::string_view name);

struct Keypoint {
  double x = 0;  // pixel column
  double y = 0;  // pixel row
  double confidence = 0;
  Region region = Region::body;
};

using KeypointSet = std::vector<Keypoint>;

struct PoseSequence {
  std::vector<KeypointSet> frames;
  int width = 0;
  int height = 0;
  double fps = 25.0;
};

/// Row-major [height, width] map.
template <typename T>
struct Map2D {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Map2D() = default;
  Map2D(int w, int h, T fill) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

using BoolMap = Map2D<std::uint8_t>;
using WeightMap = Map2D<double>;

struct AwarenessArea {
  BoolMap hand_face;
  BoolMap body;
};

/// Per-frame stack of weight maps, [frames, height, width].
struct ReweightMask {
  int frames = 0;
  int width = 0;
  int height = 0;
  std::vector<double> weights;

  double& at(int f, int x, int y) {
    return weights[(static_cast<std::size_t>(f) * height + y) * width + x];
  }
  double at(int f, int x, int y) const {
    return weights[(static_cast<std::size_t>(f) * height + y) * width + x];
  }
};

struct ParParams {
  double tau = 0.8;
  double radius = 10.0;
  double omega1 = 10.0;
  double omega2 = 2.0;
  double blur_sigma = 1.5;
};

/// Keypoints with confidence strictly above `tau`.
KeypointSet filter_reliable(const KeypointSet& frame, double tau);

/// Pixel (col, row) belongs to a circle when its center lies within `radius`
/// of the (clamped) keypoint; the body rectangle spans the extreme reliable
/// body coordinates inclusively.
AwarenessArea build_awareness_area(const KeypointSet& frame, double tau, double radius, int width,
                                   int height);

/// Discrete Gaussian kernel truncated at ceil(3 sigma), normalized to sum 1.
std::vector<double> gaussian_kernel(double sigma);

/// Separable blur with zero padding outside the frame.
WeightMap gaussian_blur(const WeightMap& map, double sigma);

/// One frame of the loss re-weighting mask.
WeightMap build_reweight_mask(const KeypointSet& frame, const ParParams& params, int width,
                              int height);

ReweightMask build_reweight_masks(const PoseSequence& pose, const ParParams& params);

/// Average pooling over factor x factor blocks.
ReweightMask downsample_mask(const ReweightMask& mask, int factor);

}  // namespace partsync::par
