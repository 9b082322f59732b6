// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <torch/torch.h>

#include "partsync/classifier.hpp"
#include "partsync/logging.hpp"
#include "partsync/schedule.hpp"
#include "partsync/univdm.hpp"

namespace partsync {

/// Face bounding box in pixel coordinates, inclusive of its edges.
struct FaceBox {
  int frame_index = 0;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// One entry per frame; std::nullopt where no face was found.
using FaceTrack = std::vector<std::optional<FaceBox>>;

/// Binary face map [frames, height / factor, width / factor]: a latent cell is
/// set when the box overlaps it, then the set is grown by `dilation` cells
/// (Chebyshev). Frames without a box get an empty face region, logged once
/// per call when `log` is given.
torch::Tensor face_mask_latent(const FaceTrack& boxes, int frames, int height, int width, int factor,
                               int dilation, Logger* log = nullptr);

/// Which pixels a classifier kind keeps when masking fires: everything but
/// the face for non-face, only the face for face. [.., h, w] in, same out.
torch::Tensor region_keep_map(ClassifierKind kind, const torch::Tensor& face);

struct MaskedBatch {
  torch::Tensor video;    // [B, F, C, h, w]
  torch::Tensor applied;  // [B] bool
};

/// With probability p per sample, zeroes the latent cells outside the kind's
/// keep map. video [B, F, C, h, w], face [B, F, h, w].
MaskedBatch apply_region_masking(const torch::Tensor& video, const torch::Tensor& face, ClassifierKind kind,
                                 double p, std::mt19937_64& rng);

/// Lengths {30, 60, 90, 120} multiplied by `factor`, rounded, at least 1.
std::vector<int> scaled_lengths(double factor);

struct CropSample {
  int clip = 0;
  int start = 0;
  int length = 0;
  int reference = 0;  // uniform over the clip's frames, 0 included
};

/// Draws `n_samples` (clip, length) pairs uniformly; pairs whose clip is
/// shorter than the length are dropped and logged.
std::vector<CropSample> augment_lengths(const std::vector<int>& clip_frames, const std::vector<int>& lengths,
                                        int n_samples, std::mt19937_64& rng, Logger* log = nullptr);

struct NegativeSet {
  torch::Tensor generated;        // [N, F, C, h, w]
  torch::Tensor reference_index;  // [N] long, frame of the real clip used as reference
  torch::Tensor labels;           // [N] zeros
};

/// One generated clip per real clip, conditioned on that clip's audio and a
/// random frame of it as reference. Throws NumericError on divergence.
NegativeSet make_negative_samples(DdimSolver& solver, const torch::Tensor& latents, const torch::Tensor& audio,
                                  std::uint64_t seed, int batch = 64);

struct ClassifierData {
  torch::Tensor real;       // [N, F, C, h, w] clean latents
  torch::Tensor generated;  // [N, F, C, h, w]
  torch::Tensor audio;      // [N, F, 2m+1, d_a]
  torch::Tensor face;       // [N, F, h, w] latent face maps
};

struct ClassifierTrainOptions {
  ClassifierKind kind = ClassifierKind::nonface;
  int steps = 800;
  int batch = 16;
  double lr = 3e-4;
  int warmup = 50;
  double mask_prob = 0.8;
  std::vector<int> lengths = {2, 4, 6, 8};
  bool freeze_encoder = false;
  std::uint64_t seed = 0;
};

/// Balanced real/generated batches, random crops of a random length, t
/// uniform over the schedule, masking after noising. Returns per-step losses.
std::vector<double> train_classifier(SyncClassifier& net, const ClassifierData& data,
                                     const std::vector<std::int64_t>& train_idx, const NoiseSchedule& schedule,
                                     const ClassifierTrainOptions& options, Logger* log = nullptr);

struct ClassifierEval {
  double accuracy = 0;
  double mean_real = 0;
  double mean_generated = 0;
  std::int64_t n_pairs = 0;
};

/// Scores full-length real and generated clips of `idx` at timestep t with
/// the kind's masking policy; accuracy thresholds s at 0.5.
ClassifierEval evaluate_classifier(SyncClassifier& net, const ClassifierData& data,
                                   const std::vector<std::int64_t>& idx, const NoiseSchedule& schedule,
                                   ClassifierKind kind, double mask_prob, int t, std::uint64_t seed);

}  // namespace partsync
