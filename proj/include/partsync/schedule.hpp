// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>
#include <vector>

#include <torch/torch.h>

namespace partsync {

enum class ScheduleKind { linear_beta, cosine };

ScheduleKind schedule_kind_from_string(std::string_view name);
std::string_view to_string(ScheduleKind kind);

/// Forward-process coefficients: z_t = lambda[t] * z_0 + sigma[t] * eps.
/// Index 0 is the clean endpoint (lambda = 1, sigma = 0); lambda decreases
/// strictly with t and sigma[t] = sqrt(1 - lambda[t]^2).
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::linear_beta;
  std::vector<double> lambda;
  std::vector<double> sigma;

  int steps() const { return static_cast<int>(lambda.size()); }
};

/// linear-beta: betas linear over t = 1..T-1 between 1e-4 and 0.02, both scaled
/// by 1000/T (capped at 0.999) so the terminal signal level is comparable for
/// any T. cosine: alpha_bar(t) = f(t)/f(0), f(t) = cos^2(((t/(T-1)) + s)/(1+s) * pi/2),
/// s = 0.008.
NoiseSchedule make_schedule(int steps, ScheduleKind kind);

/// lambda_t * z0 + sigma_t * eps. Throws std::invalid_argument on shape mismatch
/// or t outside [0, T).
torch::Tensor add_noise(const torch::Tensor& z0, const torch::Tensor& eps, int t,
                        const NoiseSchedule& schedule);

/// Per-sample variant: `t` holds one timestep per leading-dimension entry.
torch::Tensor add_noise(const torch::Tensor& z0, const torch::Tensor& eps, const torch::Tensor& t,
                        const NoiseSchedule& schedule);

/// Evenly spaced DDIM sub-schedule with n_steps transitions:
/// n_steps + 1 descending timesteps from T-1 down to 0.
std::vector<int> inference_timesteps(const NoiseSchedule& schedule, int n_steps);

}  // namespace partsync
