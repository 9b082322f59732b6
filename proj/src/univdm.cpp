// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/univdm.hpp"

#include <stdexcept>

#include "partsync/error.hpp"

namespace partsync {

torch::Tensor predict_noise(Denoiser& net, const DenoiseInput& input) {
  if (input.z_t.dim() != 5) throw std::invalid_argument("z_t must be [B, F, C, h, w]");
  if (input.audio.dim() != 4 || input.audio.size(1) != input.z_t.size(1)) {
    throw std::invalid_argument("audio frame count does not match the latent video");
  }
  if (input.t.dim() != 1 || input.t.size(0) != input.z_t.size(0)) {
    throw std::invalid_argument("one timestep per batch entry required");
  }
  return net->forward(input);
}

torch::Tensor par_weighted_loss(const torch::Tensor& eps, const torch::Tensor& eps_hat,
                                const torch::Tensor& mask, const torch::Tensor& valid) {
  if (eps.sizes() != eps_hat.sizes()) throw std::invalid_argument("loss: prediction shape mismatch");
  if (mask.dim() != 4 || mask.size(0) != eps.size(0) || mask.size(1) != eps.size(1) ||
      mask.size(2) != eps.size(3) || mask.size(3) != eps.size(4)) {
    throw std::invalid_argument("loss: mask must be [B, F, h, w] at latent resolution");
  }
  if (!(mask > 0).all().item<bool>()) throw std::invalid_argument("loss: mask values must be positive");
  auto m = mask.to(eps.scalar_type()).unsqueeze(2).expand_as(eps);
  if (valid.defined()) m = m * valid.to(eps.scalar_type()).view({eps.size(0), eps.size(1), 1, 1, 1});
  const auto err = (eps - eps_hat).pow(2);
  return (m * err).sum() / m.sum();
}

double par_train_step(Denoiser& net, torch::optim::Optimizer& optimizer, const TrainBatch& batch,
                      const NoiseSchedule& schedule) {
  const auto B = batch.z0.size(0);
  const auto Fr = batch.z0.size(1);
  auto t = torch::randint(1, schedule.steps(), {B}, torch::kLong);
  auto eps = torch::randn_like(batch.z0);
  auto z_t = add_noise(batch.z0, eps, t, schedule);

  torch::Tensor first = batch.first_frame.defined() ? batch.first_frame.to(batch.z0.scalar_type())
                                                   : torch::zeros({B}, batch.z0.options());
  // Conditioned clips see their clean first frame and are not scored on it.
  const auto cond = first.view({B, 1, 1, 1});
  z_t.select(1, 0).copy_(cond * batch.z0.select(1, 0) + (1 - cond) * z_t.select(1, 0));
  auto valid = torch::ones({B, Fr}, batch.z0.options());
  valid.select(1, 0).copy_(1 - first);

  DenoiseInput in{z_t, batch.reference, first, t, batch.audio};
  const auto eps_hat = predict_noise(net, in);
  const auto loss = par_weighted_loss(eps, eps_hat, batch.mask, valid);
  optimizer.zero_grad();
  loss.backward();
  optimizer.step();
  return loss.item<double>();
}

torch::Tensor ddim_update(const torch::Tensor& z, const torch::Tensor& eps, int t_from, int t_to,
                          const NoiseSchedule& schedule) {
  const double lf = schedule.lambda.at(t_from), sf = schedule.sigma.at(t_from);
  const double lt = schedule.lambda.at(t_to), st = schedule.sigma.at(t_to);
  const auto x0 = (z - sf * eps) / lf;
  return lt * x0 + st * eps;
}

torch::Tensor ddim_step(Denoiser& net, const torch::Tensor& z, const SamplingCondition& cond, int t_from,
                        int t_to, const NoiseSchedule& schedule) {
  if (t_from <= 0 || t_from >= schedule.steps() || t_to < 0 || t_to >= t_from) {
    throw std::invalid_argument("ddim_step: steps must satisfy 0 <= t_to < t_from < T");
  }
  const auto B = z.size(0);
  auto x = z;
  torch::Tensor first;
  if (cond.first_frame.defined()) {
    x = z.clone();
    x.select(1, 0).copy_(cond.first_frame);
    first = torch::ones({B}, z.options());
  }
  const auto t = torch::full({B}, t_from, torch::kLong);
  const auto eps = predict_noise(net, DenoiseInput{x, cond.reference, first, t, cond.audio});
  auto out = ddim_update(x, eps, t_from, t_to, schedule);
  if (cond.first_frame.defined()) out.select(1, 0).copy_(cond.first_frame);
  return out;
}

DdimSolver::DdimSolver(Denoiser net, const NoiseSchedule& schedule, int n_steps)
    : net_(std::move(net)), schedule_(schedule), timesteps_(inference_timesteps(schedule, n_steps)) {}

torch::Tensor DdimSolver::step(const torch::Tensor& z, const SamplingCondition& cond, int i) {
  if (i < 0 || i >= n_steps()) throw std::invalid_argument("solver step index out of range");
  ++calls_;
  torch::NoGradGuard no_grad;
  return ddim_step(net_, z, cond, timesteps_[i], timesteps_[i + 1], schedule_);
}

UnifiedInput make_unified_input(const std::optional<torch::Tensor>& first_frame, int batch, int frames,
                                int channels, int height, int width, std::uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  UnifiedInput out;
  out.z = torch::randn({batch, frames, channels, height, width}, gen, torch::kFloat32);
  if (first_frame) {
    const auto& f = *first_frame;
    if (f.dim() == 3) {
      out.z.select(1, 0).copy_(f.unsqueeze(0).expand({batch, channels, height, width}));
    } else {
      out.z.select(1, 0).copy_(f);
    }
    out.first_frame_conditioned = true;
  }
  return out;
}

torch::Tensor sample_plain(DdimSolver& solver, const UnifiedInput& start, const SamplingCondition& cond) {
  auto z = start.z;
  for (int i = 0; i < solver.n_steps(); ++i) {
    z = solver.step(z, cond, i);
    if (!torch::isfinite(z).all().item<bool>()) {
      throw NumericError("sampler diverged at step " + std::to_string(i));
    }
  }
  return z;
}

std::vector<double> train_denoiser(Denoiser& net, const DenoiserTrainData& data, const NoiseSchedule& schedule,
                                   const DenoiserTrainOptions& options) {
  torch::manual_seed(options.seed);
  net->train();
  torch::optim::AdamW opt(net->parameters(), torch::optim::AdamWOptions(options.lr).weight_decay(0.0));
  const auto N = data.latents.size(0);
  const auto Fr = data.latents.size(1);
  const auto B = std::min<std::int64_t>(options.batch, N);
  std::vector<double> losses;
  losses.reserve(options.steps);
  for (int step = 0; step < options.steps; ++step) {
    const auto idx = torch::randint(N, {B}, torch::kLong);
    const auto z0 = data.latents.index_select(0, idx);
    const auto ref_idx = torch::randint(Fr, {B}, torch::kLong);
    const auto reference = z0.gather(1, ref_idx.view({B, 1, 1, 1, 1}).expand({B, 1, z0.size(2), z0.size(3), z0.size(4)}))
                               .squeeze(1);
    const auto first = (torch::rand({B}) < options.cond_first_prob).to(torch::kFloat32);
    TrainBatch batch{z0, reference, data.audio.index_select(0, idx), data.masks.index_select(0, idx), first};
    losses.push_back(par_train_step(net, opt, batch, schedule));
  }
  net->eval();
  return losses;
}

}  // namespace partsync
