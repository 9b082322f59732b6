// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <torch/torch.h>

#include "partsync/classifier.hpp"
#include "partsync/univdm.hpp"

namespace partsync {

enum class GuidanceMode { off, sg, dg };
enum class GuidanceSign { ascend, descend };

GuidanceMode guidance_mode_from_string(std::string_view name);
std::string_view to_string(GuidanceMode mode);
GuidanceSign guidance_sign_from_string(std::string_view name);
std::string_view to_string(GuidanceSign sign);

struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::off;
  double lambda_face = 0.1;
  double lambda_nonface = 1.0;
  double lambda_diff = 0.25;
  double rate = 0.5;
  GuidanceSign sign = GuidanceSign::ascend;
  bool dg_strict_noop = false;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  /// Guided states for an n-step solver: min(ceil(rate * n), n - 1), or 0
  /// when mode is off. The first transition produces the first guided state,
  /// and every guided state needs a transition after it.
  int guided_steps(int n_steps) const;
};

/// Complementary latent-resolution masks, each [B, F, 1, h, w].
struct RegionMasks {
  torch::Tensor face;
  torch::Tensor nonface;
};

/// face: [F, h, w] or [B, F, h, w] with values in {0, 1}.
RegionMasks make_region_masks(const torch::Tensor& face);

struct GuidanceClassifiers {
  SyncClassifier face{nullptr};
  SyncClassifier nonface{nullptr};
};

struct GuidanceStats {
  std::int64_t solver_calls = 0;
  std::int64_t gradient_calls = 0;
  int guided_steps = 0;
  std::vector<double> step_seconds;  // one entry per solver transition
};

/// States of one guided step: the solver output and its three guided variants.
struct GuidanceChain {
  torch::Tensor z;
  torch::Tensor nonface;
  torch::Tensor face;
  torch::Tensor star;
  int index = 0;  // sub-schedule index of z's timestep
};

/// Applies both regional gradients to z at sub-schedule index `index`: the
/// non-face step first, then the face gradient evaluated at the non-face
/// state and applied to z, then star = face + nonface - z. A weight of 0
/// skips its classifier entirely.
GuidanceChain guide(const torch::Tensor& z, int index, DdimSolver& solver, const SamplingCondition& cond,
                    GuidanceClassifiers& classifiers, const RegionMasks& masks, const GuidanceConfig& cfg,
                    GuidanceStats* stats = nullptr);

/// Solver transition i followed by guide() at index i + 1.
GuidanceChain sg_step(const torch::Tensor& z_prev, int i, DdimSolver& solver, const SamplingCondition& cond,
                      GuidanceClassifiers& classifiers, const RegionMasks& masks, const GuidanceConfig& cfg,
                      GuidanceStats* stats = nullptr);

/// Sequential transition out of a chain: f(star).
torch::Tensor sg_update(const GuidanceChain& chain, DdimSolver& solver, const SamplingCondition& cond);

/// Differential transition out of a chain:
/// f(star) + lambda_diff * (f(nonface) * M_face + f(face) * M_nonface),
/// divided by 1 + lambda_diff when dg_strict_noop is set. Three solver calls.
torch::Tensor dg_step(const GuidanceChain& chain, DdimSolver& solver, const SamplingCondition& cond,
                      const RegionMasks& masks, const GuidanceConfig& cfg);

/// Full sampling run from `start`. Guided states are the outputs of the
/// first guided_steps() transitions; the rest is plain solving.
torch::Tensor sample_video(DdimSolver& solver, GuidanceClassifiers& classifiers, const UnifiedInput& start,
                           const SamplingCondition& cond, const RegionMasks& masks, const GuidanceConfig& cfg,
                           GuidanceStats* stats = nullptr);

struct LongVideo {
  torch::Tensor frames;                 // [total, C, h, w], shared boundaries kept once
  std::vector<torch::Tensor> segments;  // each [len_k, C, h, w]
  GuidanceStats stats;
};

/// Chains segments of `segment_len` frames: segment k+1 starts from the last
/// latent of segment k. audio [total, 2m+1, d_a], face [total, h, w],
/// reference [C, h, w]. A shorter final segment (at least 2 frames) covers
/// any remainder.
LongVideo generate_long(DdimSolver& solver, GuidanceClassifiers& classifiers, const torch::Tensor& reference,
                        const torch::Tensor& audio, const torch::Tensor& face, int segment_len,
                        const GuidanceConfig& cfg, std::uint64_t seed);

}  // namespace partsync
