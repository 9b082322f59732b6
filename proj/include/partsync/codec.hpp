// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <torch/torch.h>

namespace partsync {

/// Maps RGB frames [N, 3, H, W] to latents [N, C, H/f, W/f] and back.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual torch::Tensor encode(const torch::Tensor& frames) const = 0;
  virtual torch::Tensor decode(const torch::Tensor& latents) const = 0;
  virtual int factor() const = 0;
  virtual int channels() const = 0;
};

/// Lossless space-to-depth codec (C = 3 f^2); used where a trained codec would
/// only add noise to a test.
class PatchifyCodec final : public LatentCodec {
 public:
  explicit PatchifyCodec(int factor) : factor_(factor) {}
  torch::Tensor encode(const torch::Tensor& frames) const override;
  torch::Tensor decode(const torch::Tensor& latents) const override;
  int factor() const override { return factor_; }
  int channels() const override { return 3 * factor_ * factor_; }

 private:
  int factor_;
};

/// Small convolutional autoencoder with 8x spatial downsampling. Latents are
/// standardized per channel with statistics fitted after training.
class ConvAutoencoderImpl : public torch::nn::Module {
 public:
  ConvAutoencoderImpl(int latent_channels, int width);

  torch::Tensor encode(const torch::Tensor& frames);
  torch::Tensor decode(const torch::Tensor& latents);
  torch::Tensor forward(const torch::Tensor& frames) { return decode(encode(frames)); }

  /// Fits latent_mean/latent_std on `frames` (no grad).
  void calibrate(const torch::Tensor& frames);

  int latent_channels() const { return latent_channels_; }

 private:
  torch::Tensor encode_raw(const torch::Tensor& frames);
  torch::Tensor decode_raw(const torch::Tensor& latents);

  int latent_channels_;
  torch::nn::Sequential encoder_{nullptr};
  torch::nn::Sequential decoder_{nullptr};
  torch::Tensor latent_mean_;
  torch::Tensor latent_std_;
};
TORCH_MODULE(ConvAutoencoder);

class ConvLatentCodec final : public LatentCodec {
 public:
  explicit ConvLatentCodec(ConvAutoencoder net) : net_(std::move(net)) {}
  torch::Tensor encode(const torch::Tensor& frames) const override;
  torch::Tensor decode(const torch::Tensor& latents) const override;
  int factor() const override { return 8; }
  int channels() const override { return net_->latent_channels(); }
  ConvAutoencoder& net() { return net_; }

 private:
  ConvAutoencoder net_;
};

struct CodecTrainOptions {
  int steps = 600;
  int batch = 32;
  double lr = 2e-3;
  std::uint64_t seed = 0;
};

/// Reconstruction training (L1 + MSE) on frames [N, 3, H, W]; returns per-step losses.
std::vector<double> train_codec(ConvAutoencoder& net, const torch::Tensor& frames,
                                const CodecTrainOptions& options);

}  // namespace partsync
