// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <torch/torch.h>

#include "partsync/classifier_data.hpp"
#include "partsync/par_mask.hpp"

namespace partsync {

struct SyntheticOptions {
  int n_clips = 500;
  int frames = 8;
  int height = 32;
  int width = 32;
  double fps = 25.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
  double speed_gain = 3.0;  // limb angular speed (rad/frame) per unit frame energy
};

/// Procedural stick figure whose arms swing at speed_gain * energy of each
/// frame's audio and whose mouth opens with the same energy.
struct SyntheticClip {
  torch::Tensor frames;             // [F, 3, H, W] in [0, 1], quantized to 1/255
  std::vector<std::int16_t> audio;  // F * samples_per_frame PCM samples
  std::vector<double> energies;     // per frame, from the quantized audio
  std::vector<double> limb_speed;   // per frame |delta angle| of each arm
  par::PoseSequence pose;
  FaceTrack faces;
};

int samples_per_frame(const SyntheticOptions& options);

SyntheticClip make_synthetic_clip(const SyntheticOptions& options, int index);

/// Random permutation without fixed points (n >= 2).
std::vector<int> derangement(int n, std::mt19937_64& rng);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace partsync
