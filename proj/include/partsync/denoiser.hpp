// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>

#include <torch/torch.h>

namespace partsync {

/// Stacks the reference latent in front of the video frames along time:
/// [C, h, w] + [F, C, h, w] -> [F+1, C, h, w]. Batched inputs ([B, C, h, w] +
/// [B, F, C, h, w]) are stacked along dim 1.
torch::Tensor merge_reference(const torch::Tensor& reference, const torch::Tensor& video);

/// Inverse of merge_reference: returns {reference, video}.
std::pair<torch::Tensor, torch::Tensor> split_reference(const torch::Tensor& merged);

/// Everything one denoiser evaluation needs.
struct DenoiseInput {
  torch::Tensor z_t;          // [B, F, C, h, w]
  torch::Tensor reference;    // [B, C, h, w]
  torch::Tensor first_frame;  // [B] float in {0, 1}; 1 = frame 0 of z_t is a clean condition
  torch::Tensor t;            // [B] long
  torch::Tensor audio;        // [B, F, 2m+1, d_a]
};

struct DenoiserOptions {
  int latent_channels = 4;
  int width = 32;
  int audio_dim = 8;  // d_a
  int heads = 4;
};

/// Sinusoidal timestep features followed by a two-layer MLP.
class TimestepEmbeddingImpl : public torch::nn::Module {
 public:
  explicit TimestepEmbeddingImpl(int dim);
  torch::Tensor forward(const torch::Tensor& t);

 private:
  int dim_;
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(TimestepEmbedding);

class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(int in, int out, int temb_dim);
  /// x: [N, in, h, w], temb: [N, temb_dim]
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& temb);

 private:
  torch::nn::GroupNorm norm1_{nullptr}, norm2_{nullptr};
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
  torch::nn::Linear temb_proj_{nullptr};
};
TORCH_MODULE(ResBlock);

/// Self-attention across the slot (time) axis at every spatial position.
class TemporalAttentionImpl : public torch::nn::Module {
 public:
  TemporalAttentionImpl(int channels, int heads);
  /// x: [B, S, C, h, w]
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::LayerNorm norm_{nullptr};
  torch::nn::MultiheadAttention attn_{nullptr};
};
TORCH_MODULE(TemporalAttention);

/// Per-frame cross-attention from spatial latent tokens to that frame's audio window.
class AudioCrossAttentionImpl : public torch::nn::Module {
 public:
  AudioCrossAttentionImpl(int channels, int audio_dim, int heads);
  /// x: [N, C, h, w]; audio: [N, K, d_a]
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& audio);

 private:
  torch::nn::LayerNorm norm_{nullptr};
  torch::nn::Linear kv_{nullptr};
  torch::nn::MultiheadAttention attn_{nullptr};
};
TORCH_MODULE(AudioCrossAttention);

/// Residual block + temporal attention + audio cross-attention.
class VideoBlockImpl : public torch::nn::Module {
 public:
  VideoBlockImpl(int in, int out, int temb_dim, int audio_dim, int heads);
  /// x: [B, S, in, h, w]; temb: [B, temb]; audio: [B, S, K, d_a]
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& temb, const torch::Tensor& audio);

 private:
  ResBlock res_{nullptr};
  TemporalAttention temporal_{nullptr};
  AudioCrossAttention cross_{nullptr};
};
TORCH_MODULE(VideoBlock);

struct EncoderFeatures {
  torch::Tensor features;  // [B, S, 2W, h/2, w/2]
  torch::Tensor skip;      // [B, S, W, h, w]
  torch::Tensor temb;      // [B, W]
};

/// Down path of the denoiser. The regional classifiers instantiate the same
/// module and copy its weights from a trained denoiser.
class UNetEncoderImpl : public torch::nn::Module {
 public:
  explicit UNetEncoderImpl(const DenoiserOptions& options);
  /// x: [B, S, C+1, h, w] (last channel flags clean conditioning slots).
  EncoderFeatures forward(const torch::Tensor& x, const torch::Tensor& t, const torch::Tensor& audio);
  int feature_channels() const { return 2 * options_.width; }
  const DenoiserOptions& options() const { return options_; }

 private:
  DenoiserOptions options_;
  TimestepEmbedding time_embed_{nullptr};
  torch::nn::Conv2d in_conv_{nullptr};
  VideoBlock block1_{nullptr};
  torch::nn::Conv2d down_{nullptr};
  VideoBlock block2_{nullptr};
};
TORCH_MODULE(UNetEncoder);

/// Noise predictor over the reference-merged latent video.
class DenoiserImpl : public torch::nn::Module {
 public:
  explicit DenoiserImpl(const DenoiserOptions& options);

  /// Returns the predicted noise for the video frames, [B, F, C, h, w]. The
  /// reference slot is consumed as context and dropped from the output.
  torch::Tensor forward(const DenoiseInput& input);

  UNetEncoder& encoder() { return encoder_; }
  const DenoiserOptions& options() const { return options_; }

 private:
  DenoiserOptions options_;
  UNetEncoder encoder_{nullptr};
  torch::nn::Conv2d up_conv_{nullptr};
  VideoBlock dec_block_{nullptr};
  torch::nn::GroupNorm out_norm_{nullptr};
  torch::nn::Conv2d out_conv_{nullptr};
};
TORCH_MODULE(Denoiser);

/// Builds the [B, F+1, C+1, h, w] network input: slot 0 is the reference, the
/// extra channel is 1 on clean conditioning slots (reference, conditioned
/// first frame) and 0 elsewhere. Returns {input, slot audio [B, F+1, K, d_a]}.
std::pair<torch::Tensor, torch::Tensor> build_unified_slots(const DenoiseInput& input);

}  // namespace partsync
