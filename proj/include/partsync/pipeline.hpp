// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "partsync/classifier.hpp"
#include "partsync/classifier_data.hpp"
#include "partsync/codec.hpp"
#include "partsync/config.hpp"
#include "partsync/dataset.hpp"
#include "partsync/denoiser.hpp"
#include "partsync/guidance.hpp"
#include "partsync/logging.hpp"
#include "partsync/metrics.hpp"
#include "partsync/par_mask.hpp"
#include "partsync/schedule.hpp"
#include "partsync/tensor_io.hpp"

// Stage functions shared by the command-line tool and the acceptance suite.
namespace partsync::pipeline {

inline constexpr int kLatentFactor = 8;

SyntheticOptions synthetic_options(const RunConfig& cfg);
DenoiserOptions denoiser_options(const RunConfig& cfg);
ClassifierOptions classifier_options(const RunConfig& cfg);
GuidanceConfig guidance_config(const RunConfig& cfg);
par::ParParams par_params(const RunConfig& cfg);
NoiseSchedule schedule_for(const RunConfig& cfg);

/// Audio windows [F, 2m+1, d_a] for one clip's samples.
torch::Tensor clip_audio_tokens(std::span<const float> samples, int frames, const RunConfig& cfg);

/// Per-clip tensors derived from a dataset.
struct Prepared {
  torch::Tensor frames;     // [N, F, 3, H, W] float
  torch::Tensor audio;      // [N, F, 2m+1, d_a]
  torch::Tensor par_masks;  // [N, F, h, w] latent resolution
  torch::Tensor face;       // [N, F, h, w] latent face maps
};

Prepared prepare(const Dataset& ds, const RunConfig& cfg, Logger* log = nullptr);

struct Backbone {
  ConvAutoencoder codec{nullptr};
  Denoiser denoiser{nullptr};
  metrics::PoseAutoencoder pose_ae{nullptr};
  std::vector<double> codec_losses;
  std::vector<double> denoiser_losses;
  std::vector<double> pose_losses;
};

/// [N, F, 3, H, W] -> [N, F, C, h, w] without gradients.
torch::Tensor encode_latents(ConvAutoencoder& codec, const torch::Tensor& frames);
/// [N, F, C, h, w] -> [N, F, 3, H, W] without gradients.
torch::Tensor decode_latents(ConvAutoencoder& codec, const torch::Tensor& latents);

Backbone make_backbone(const RunConfig& cfg, int pose_dim);
Backbone train_backbone(const Prepared& prep, const Dataset& ds, const RunConfig& cfg, Logger* log = nullptr);

Archive backbone_archive(const Backbone& b, const RunConfig& cfg);
/// Throws ConfigError when the stored architecture differs from cfg.
Backbone backbone_from_archive(const Archive& a, const RunConfig& cfg);

/// Seeded split of clip indices into (train, held-out).
std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> split_holdout(std::int64_t n, double fraction,
                                                                                std::uint64_t seed);

struct ClassifierResult {
  SyncClassifier net{nullptr};
  std::vector<double> losses;
  ClassifierEval holdout;
};

ClassifierResult train_regional_classifier(ClassifierKind kind, Denoiser& denoiser, const ClassifierData& data,
                                           const RunConfig& cfg, Logger* log = nullptr);

Archive classifier_archive(SyncClassifier& net, ClassifierKind kind, const RunConfig& cfg);
/// Returns the classifier and its stored kind; architecture must match cfg.
std::pair<SyncClassifier, ClassifierKind> classifier_from_archive(const Archive& a, const RunConfig& cfg);

struct GenerationResult {
  torch::Tensor latents;  // [1, F, C, h, w]
  torch::Tensor frames;   // [1, F, 3, H, W], undefined when not decoded
  GuidanceStats stats;
  double sampling_seconds = 0;
  double decoding_seconds = 0;
};

/// Samples one clip conditioned on clip `clip`'s first latent frame as the
/// reference image, its audio and its face maps.
GenerationResult generate_clip(Backbone& backbone, GuidanceClassifiers& classifiers, const Prepared& prep,
                               const torch::Tensor& latents, std::int64_t clip, const GuidanceConfig& gcfg,
                               int n_steps, const NoiseSchedule& schedule, std::uint64_t seed, bool decode = true);

}  // namespace partsync::pipeline
