// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <torch/torch.h>

namespace partsync {

/// Per-frame audio features plus the A(f) windows the denoiser attends to.
struct AudioFeatureTrack {
  torch::Tensor per_frame;  // [F, d_a]
  int window = 0;           // half-width m
  torch::Tensor windowed;   // [F, (2m+1) * d_a]

  int frames() const { return static_cast<int>(per_frame.size(0)); }
  int feature_dim() const { return static_cast<int>(per_frame.size(1)); }
  /// Windowed rows split into 2m+1 tokens: [F, 2m+1, d_a].
  torch::Tensor tokens() const;
};

/// Row f of the result is per_frame[f-m] ++ ... ++ per_frame[f+m], with rows
/// outside [0, F) replaced by the nearest boundary row.
AudioFeatureTrack window_audio(const torch::Tensor& per_frame, int m);

/// Pluggable per-frame audio feature extractor.
class AudioFeatureExtractor {
 public:
  virtual ~AudioFeatureExtractor() = default;
  /// Returns [n_frames, dim()] features for `samples` (mono, [-1, 1]).
  virtual torch::Tensor extract(std::span<const float> samples, int sample_rate, double fps,
                                int n_frames) const = 0;
  virtual int dim() const = 0;
};

/// Log energies in `bands` mel-spaced bands of each video frame's audio slice.
class LogBandEnergyExtractor final : public AudioFeatureExtractor {
 public:
  explicit LogBandEnergyExtractor(int bands) : bands_(bands) {}
  torch::Tensor extract(std::span<const float> samples, int sample_rate, double fps,
                        int n_frames) const override;
  int dim() const override { return bands_; }

 private:
  int bands_;
};

/// Mean of squared samples of each video frame's slice.
std::vector<double> frame_energies(std::span<const float> samples, int sample_rate, double fps,
                                   int n_frames);

struct WavData {
  int sample_rate = 0;
  std::vector<std::int16_t> pcm;  // mono

  std::vector<float> as_float() const;
};

/// 16-bit PCM mono RIFF/WAVE.
void write_wav(const std::filesystem::path& path, const WavData& wav);
/// Accepts 16-bit PCM; multi-channel input is down-mixed to mono.
WavData read_wav(const std::filesystem::path& path);

}  // namespace partsync
