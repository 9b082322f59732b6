// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/codec.hpp"

#include <stdexcept>

namespace partsync {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

torch::Tensor PatchifyCodec::encode(const torch::Tensor& frames) const {
  return F::pixel_unshuffle(frames, F::PixelUnshuffleFuncOptions(factor_));
}

torch::Tensor PatchifyCodec::decode(const torch::Tensor& latents) const {
  return F::pixel_shuffle(latents, F::PixelShuffleFuncOptions(factor_));
}

namespace {

nn::Conv2d conv(int in, int out, int k, int stride = 1) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(stride).padding((k - 1) / 2));
}

nn::Conv2d down(int in, int out) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(2).padding(1));
}

nn::Upsample up() {
  return nn::Upsample(nn::UpsampleOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
}

}  // namespace

ConvAutoencoderImpl::ConvAutoencoderImpl(int latent_channels, int width)
    : latent_channels_(latent_channels) {
  encoder_ = register_module(
      "encoder", nn::Sequential(conv(3, width, 3), nn::SiLU(), down(width, width), nn::SiLU(),
                                down(width, 2 * width), nn::SiLU(), down(2 * width, 2 * width),
                                nn::SiLU(), conv(2 * width, latent_channels, 1)));
  decoder_ = register_module(
      "decoder",
      nn::Sequential(conv(latent_channels, 2 * width, 3), nn::SiLU(), up(), conv(2 * width, 2 * width, 3),
                     nn::SiLU(), up(), conv(2 * width, width, 3), nn::SiLU(), up(), conv(width, width, 3),
                     nn::SiLU(), conv(width, 3, 3)));
  latent_mean_ = register_buffer("latent_mean", torch::zeros({latent_channels}));
  latent_std_ = register_buffer("latent_std", torch::ones({latent_channels}));
}

torch::Tensor ConvAutoencoderImpl::encode_raw(const torch::Tensor& frames) { return encoder_->forward(frames); }

torch::Tensor ConvAutoencoderImpl::decode_raw(const torch::Tensor& latents) { return decoder_->forward(latents); }

torch::Tensor ConvAutoencoderImpl::encode(const torch::Tensor& frames) {
  const auto z = encode_raw(frames);
  return (z - latent_mean_.view({1, -1, 1, 1})) / latent_std_.view({1, -1, 1, 1});
}

torch::Tensor ConvAutoencoderImpl::decode(const torch::Tensor& latents) {
  return decode_raw(latents * latent_std_.view({1, -1, 1, 1}) + latent_mean_.view({1, -1, 1, 1}));
}

void ConvAutoencoderImpl::calibrate(const torch::Tensor& frames) {
  torch::NoGradGuard no_grad;
  std::vector<torch::Tensor> parts;
  for (std::int64_t i = 0; i < frames.size(0); i += 256) {
    parts.push_back(encode_raw(frames.slice(0, i, std::min<std::int64_t>(i + 256, frames.size(0)))));
  }
  const auto z = torch::cat(parts, 0).transpose(0, 1).reshape({latent_channels_, -1});
  latent_mean_.copy_(z.mean(1));
  latent_std_.copy_(z.std(1).clamp_min(1e-4));
}

torch::Tensor ConvLatentCodec::encode(const torch::Tensor& frames) const {
  torch::NoGradGuard no_grad;
  return net_.ptr()->encode(frames);
}

torch::Tensor ConvLatentCodec::decode(const torch::Tensor& latents) const {
  torch::NoGradGuard no_grad;
  return net_.ptr()->decode(latents);
}

std::vector<double> train_codec(ConvAutoencoder& net, const torch::Tensor& frames,
                                const CodecTrainOptions& options) {
  if (frames.dim() != 4 || frames.size(1) != 3) throw std::invalid_argument("frames must be [N, 3, H, W]");
  torch::manual_seed(options.seed);
  net->train();
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(options.lr));
  std::vector<double> losses;
  losses.reserve(options.steps);
  const auto n = frames.size(0);
  for (int step = 0; step < options.steps; ++step) {
    const auto idx = torch::randint(n, {std::min<std::int64_t>(options.batch, n)}, torch::kLong);
    const auto x = frames.index_select(0, idx);
    const auto y = net->forward(x);
    const auto loss = F::l1_loss(y, x) + F::mse_loss(y, x);
    opt.zero_grad();
    loss.backward();
    opt.step();
    losses.push_back(loss.item<double>());
  }
  net->eval();
  net->calibrate(frames);
  return losses;
}

}  // namespace partsync
