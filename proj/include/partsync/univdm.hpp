// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "partsync/denoiser.hpp"
#include "partsync/schedule.hpp"

namespace partsync {

/// predict_noise with argument validation; returns [B, F, C, h, w].
torch::Tensor predict_noise(Denoiser& net, const DenoiseInput& input);

/// sum(M * (eps - eps_hat)^2) / sum(M), with M [B, F, h, w] broadcast over
/// channels. Throws std::invalid_argument when any mask value is <= 0.
/// `valid` ([B, F], 0/1) removes frames (e.g. clean conditioning frames)
/// from both sums.
torch::Tensor par_weighted_loss(const torch::Tensor& eps, const torch::Tensor& eps_hat,
                                const torch::Tensor& mask, const torch::Tensor& valid = {});

struct TrainBatch {
  torch::Tensor z0;           // [B, F, C, h, w]
  torch::Tensor reference;    // [B, C, h, w]
  torch::Tensor audio;        // [B, F, 2m+1, d_a]
  torch::Tensor mask;         // [B, F, h, w] at latent resolution
  torch::Tensor first_frame;  // [B] 0/1, optional
};

/// One optimizer step on the re-weighted objective; returns the loss value.
double par_train_step(Denoiser& net, torch::optim::Optimizer& optimizer, const TrainBatch& batch,
                      const NoiseSchedule& schedule);

/// Conditions shared by every step of one sampling run.
struct SamplingCondition {
  torch::Tensor reference;    // [B, C, h, w]
  torch::Tensor audio;        // [B, F, 2m+1, d_a]
  torch::Tensor first_frame;  // [B, C, h, w] clean latent, or undefined
};

/// The eta = 0 DDIM update for a given noise estimate: predicts z0 from
/// (z, eps) at t_from and re-noises it to t_to.
torch::Tensor ddim_update(const torch::Tensor& z, const torch::Tensor& eps, int t_from, int t_to,
                          const NoiseSchedule& schedule);

/// Deterministic (eta = 0) DDIM transition from t_from to t_to < t_from on the
/// training schedule. With a first-frame condition, frame 0 is pinned to the
/// condition before and after the update.
torch::Tensor ddim_step(Denoiser& net, const torch::Tensor& z, const SamplingCondition& cond, int t_from,
                        int t_to, const NoiseSchedule& schedule);

/// f_theta over an evenly spaced sub-schedule; counts its evaluations.
class DdimSolver {
 public:
  DdimSolver(Denoiser net, const NoiseSchedule& schedule, int n_steps);

  /// Transition i: timesteps()[i] -> timesteps()[i + 1].
  torch::Tensor step(const torch::Tensor& z, const SamplingCondition& cond, int i);

  int n_steps() const { return static_cast<int>(timesteps_.size()) - 1; }
  const std::vector<int>& timesteps() const { return timesteps_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  double sigma_at(int i) const { return schedule_.sigma[timesteps_.at(i)]; }

  std::int64_t calls() const { return calls_; }
  void reset_calls() { calls_ = 0; }

 private:
  Denoiser net_;
  NoiseSchedule schedule_;
  std::vector<int> timesteps_;
  std::int64_t calls_ = 0;
};

/// Starting point of sampling: Gaussian noise [B, F, C, h, w], with frame 0
/// replaced by `first_frame` when one is given.
struct UnifiedInput {
  torch::Tensor z;
  bool first_frame_conditioned = false;
};

UnifiedInput make_unified_input(const std::optional<torch::Tensor>& first_frame, int batch, int frames,
                                int channels, int height, int width, std::uint64_t seed);

/// Plain DDIM sampling (no guidance) from `start`.
torch::Tensor sample_plain(DdimSolver& solver, const UnifiedInput& start, const SamplingCondition& cond);

struct DenoiserTrainData {
  torch::Tensor latents;  // [N, F, C, h, w]
  torch::Tensor audio;    // [N, F, 2m+1, d_a]
  torch::Tensor masks;    // [N, F, h, w]
};

struct DenoiserTrainOptions {
  int steps = 500;
  int batch = 16;
  double lr = 1e-3;
  double cond_first_prob = 0.25;
  std::uint64_t seed = 0;
};

/// Trains on random clips; the reference is a uniformly drawn frame of the
/// same clip. Returns per-step losses.
std::vector<double> train_denoiser(Denoiser& net, const DenoiserTrainData& data, const NoiseSchedule& schedule,
                                   const DenoiserTrainOptions& options);

}  // namespace partsync
