// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

#include <torch/torch.h>

#include "partsync/denoiser.hpp"

namespace partsync {

enum class ClassifierKind { face, nonface };

std::string_view to_string(ClassifierKind kind);
/// Accepts "face" and "non-face" (also "nonface").
ClassifierKind classifier_kind_from_string(std::string_view name);

struct ClassifierOptions {
  DenoiserOptions encoder;  // must match the denoiser the weights are copied from
  int window = 2;           // audio half-width m
  int layers = 4;
  int heads = 4;
  int max_video_tokens = 16;
  int max_audio_tokens = 16;
};

/// Inputs of one classifier evaluation.
struct ClassifierInput {
  torch::Tensor video;  // [B, t_v, C, h, w] noised latents
  torch::Tensor t;      // [B] long
  torch::Tensor audio;  // [B, t_a, 2m+1, d_a] clean audio windows
};

/// Rotation angles for 3D rotary encoding of a [frames, h, w] grid with
/// `channels` features: [frames, h, w, channels / 2]. Channel pairs are split
/// across the frame, row and column axes (frame and row take the remainder).
torch::Tensor rope3d_angles(int frames, int height, int width, int channels,
                            torch::ScalarType dtype = torch::kFloat32);

/// Rotates channel pairs of features [B, F, c, h, w] by rope3d_angles.
torch::Tensor apply_rope3d(const torch::Tensor& features);

/// Diffusion-encoder audio-visual synchronization classifier.
///
/// Video frames pass through the denoiser's down path, get 3D rotary phases,
/// and are max-pooled to one token per frame; audio windows are projected to
/// tokens. The transformer sees [CLS, video tokens, audio tokens] and the head
/// reads only the CLS output.
class SyncClassifierImpl : public torch::nn::Module {
 public:
  explicit SyncClassifierImpl(const ClassifierOptions& options);

  /// [B, t_v, C, h, w] -> [B, t_v, c].
  torch::Tensor encode_video_tokens(const torch::Tensor& video, const torch::Tensor& t,
                                    const torch::Tensor& audio_windows);
  /// [B, t_a, 2m+1, d_a] -> [B, t_a, c].
  torch::Tensor encode_audio_tokens(const torch::Tensor& audio_windows);
  /// [CLS] ++ video ++ audio -> [B, 1 + t_v + t_a, c].
  torch::Tensor assemble_sequence(const torch::Tensor& video_tokens, const torch::Tensor& audio_tokens);
  /// Transformer encoder over a [B, L, c] sequence.
  torch::Tensor transform(const torch::Tensor& sequence);
  /// MLP head on the index-0 output: [B, L, c] -> logits [B].
  torch::Tensor head(const torch::Tensor& outputs);

  torch::Tensor logits(const ClassifierInput& input);
  /// Sigmoid of logits, in (0, 1).
  torch::Tensor score(const ClassifierInput& input) { return torch::sigmoid(logits(input)); }

  /// Copies the denoiser's encoder weights into this classifier's encoder.
  void init_encoder_from(Denoiser& denoiser);
  void set_encoder_frozen(bool frozen);

  int width() const { return width_; }
  const ClassifierOptions& options() const { return options_; }
  UNetEncoder& encoder() { return encoder_; }
  torch::Tensor& modal_embedding() { return modal_; }

  static constexpr int kAudioModality = 0;
  static constexpr int kVisualModality = 1;

 private:
  ClassifierOptions options_;
  int width_;
  UNetEncoder encoder_{nullptr};
  torch::nn::Linear audio_proj_{nullptr};
  torch::Tensor modal_;           // [2, c]
  torch::Tensor temporal_video_;  // [max_tv, c]
  torch::Tensor temporal_audio_;  // [max_ta, c]
  torch::Tensor cls_;             // [c]
  torch::nn::TransformerEncoder transformer_{nullptr};
  torch::nn::Linear head_fc1_{nullptr}, head_fc2_{nullptr};
};
TORCH_MODULE(SyncClassifier);

/// Mean binary cross-entropy with s clamped to [1e-7, 1 - 1e-7].
torch::Tensor bce_loss(const torch::Tensor& s, const torch::Tensor& y);

/// d log s / d video, multiplied elementwise by `region_mask` (broadcastable
/// to the video shape). Throws NumericError on non-finite gradients.
torch::Tensor sync_gradient(SyncClassifier& net, const torch::Tensor& video, const torch::Tensor& audio,
                            const torch::Tensor& t, const torch::Tensor& region_mask);

}  // namespace partsync
