// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace partsync {

ScheduleKind schedule_kind_from_string(std::string_view name) {
  if (name == "linear-beta") return ScheduleKind::linear_beta;
  if (name == "cosine") return ScheduleKind::cosine;
  throw std::invalid_argument("unknown schedule kind '" + std::string(name) + "'");
}

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::cosine ? "cosine" : "linear-beta";
}

NoiseSchedule make_schedule(int steps, ScheduleKind kind) {
  if (steps < 2) throw std::invalid_argument("schedule needs at least 2 steps");
  NoiseSchedule s;
  s.kind = kind;
  s.lambda.resize(steps);
  s.sigma.resize(steps);

  std::vector<double> alpha_bar(steps, 1.0);
  if (kind == ScheduleKind::linear_beta) {
    const double scale = 1000.0 / steps;
    const double b0 = 1e-4 * scale;
    const double b1 = 0.02 * scale;
    const int span = std::max(1, steps - 2);
    for (int t = 1; t < steps; ++t) {
      const double beta = std::min(0.999, b0 + (b1 - b0) * (t - 1) / span);
      alpha_bar[t] = alpha_bar[t - 1] * (1.0 - beta);
    }
  } else {
    constexpr double offset = 0.008;
    auto f = [&](int t) {
      const double u = static_cast<double>(t) / (steps - 1);
      const double c = std::cos((u + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0);
    for (int t = 0; t < steps; ++t) alpha_bar[t] = f(t) / f0;
  }
  for (int t = 0; t < steps; ++t) {
    s.lambda[t] = std::sqrt(std::clamp(alpha_bar[t], 0.0, 1.0));
    s.sigma[t] = std::sqrt(std::max(0.0, 1.0 - s.lambda[t] * s.lambda[t]));
  }
  return s;
}

torch::Tensor add_noise(const torch::Tensor& z0, const torch::Tensor& eps, int t,
                        const NoiseSchedule& schedule) {
  if (z0.sizes() != eps.sizes()) throw std::invalid_argument("add_noise: shape mismatch");
  if (t < 0 || t >= schedule.steps()) throw std::invalid_argument("add_noise: t out of range");
  return schedule.lambda[t] * z0 + schedule.sigma[t] * eps;
}

torch::Tensor add_noise(const torch::Tensor& z0, const torch::Tensor& eps, const torch::Tensor& t,
                        const NoiseSchedule& schedule) {
  if (z0.sizes() != eps.sizes()) throw std::invalid_argument("add_noise: shape mismatch");
  if (t.dim() != 1 || t.size(0) != z0.size(0)) {
    throw std::invalid_argument("add_noise: one timestep per sample required");
  }
  if (t.min().item<std::int64_t>() < 0 || t.max().item<std::int64_t>() >= schedule.steps()) {
    throw std::invalid_argument("add_noise: t out of range");
  }
  const auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  const auto lam = torch::tensor(schedule.lambda, opts).index_select(0, t.to(torch::kLong));
  const auto sig = torch::tensor(schedule.sigma, opts).index_select(0, t.to(torch::kLong));
  std::vector<std::int64_t> view(z0.dim(), 1);
  view[0] = z0.size(0);
  return lam.to(z0.scalar_type()).view(view) * z0 + sig.to(z0.scalar_type()).view(view) * eps;
}

std::vector<int> inference_timesteps(const NoiseSchedule& schedule, int n_steps) {
  const int T = schedule.steps();
  if (n_steps < 1 || n_steps > T - 1) {
    throw std::invalid_argument("inference steps must be in [1, T-1]");
  }
  std::vector<int> ts(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) {
    ts[i] = static_cast<int>(std::lround(static_cast<double>(T - 1) * (n_steps - i) / n_steps));
  }
  return ts;
}

}  // namespace partsync
