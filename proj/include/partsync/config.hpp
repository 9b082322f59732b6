// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace partsync {

/// Every tunable of a run, stored flat. Defaults are the desk-scale setup
/// (32x32 clips, 8 frames, 4x4 latents); all of them are written into the
/// run directory so a stored config fully determines the run.
struct RunConfig {
  std::uint64_t seed = 0;

  // Synthetic dataset shape.
  int n_clips = 500;
  int frames = 8;
  int height = 32;
  int width = 32;
  double fps = 25.0;
  int sample_rate = 16000;

  // Parts-aware loss re-weighting.
  double tau = 0.8;
  double r = 4.0;
  double omega1 = 10.0;
  double omega2 = 2.0;
  double blur_sigma = 1.5;

  // Audio conditioning.
  int d_a = 8;
  int m = 2;

  // Diffusion.
  int T_train = 200;
  std::string schedule = "linear-beta";
  int T_infer = 20;

  // Networks.
  int latent_channels = 4;
  int model_width = 32;
  int codec_width = 32;

  // Backbone training.
  int codec_steps = 600;
  int codec_batch = 32;
  double codec_lr = 2e-3;
  int train_steps = 500;
  int batch_size = 16;
  double lr = 1e-3;
  double cond_first_prob = 0.25;

  // Self-distillation negatives.
  int negative_steps = 30;

  // Regional classifiers.
  int cls_steps = 800;
  int cls_batch = 16;
  double cls_lr = 3e-4;
  int cls_warmup = 50;
  double mask_prob = 0.8;
  std::vector<int> cls_lengths = {2, 4, 6, 8};
  int cls_layers = 4;
  int cls_heads = 4;
  bool freeze_encoder = false;
  double holdout_fraction = 0.1;

  // Guided sampling.
  std::string mode = "off";
  double rate = 0.5;
  double lambda_face = 0.1;
  double lambda_nonface = 1.0;
  double lambda_diff = 0.25;
  std::string guidance_sign = "ascend";
  bool dg_strict_noop = false;
  int face_dilation = 0;

  // Evaluation.
  int d_g = 32;
  double sigma_b = 0.1;
  double beat_min_separation = 0.2;
  int diversity_pairs = 500;
  int pose_ae_steps = 1500;

  template <typename Visitor>
  void visit(Visitor&& v) {
    v("seed", seed);
    v("n_clips", n_clips);
    v("frames", frames);
    v("height", height);
    v("width", width);
    v("fps", fps);
    v("sample_rate", sample_rate);
    v("tau", tau);
    v("r", r);
    v("omega1", omega1);
    v("omega2", omega2);
    v("blur_sigma", blur_sigma);
    v("d_a", d_a);
    v("m", m);
    v("T_train", T_train);
    v("schedule", schedule);
    v("T_infer", T_infer);
    v("latent_channels", latent_channels);
    v("model_width", model_width);
    v("codec_width", codec_width);
    v("codec_steps", codec_steps);
    v("codec_batch", codec_batch);
    v("codec_lr", codec_lr);
    v("train_steps", train_steps);
    v("batch_size", batch_size);
    v("lr", lr);
    v("cond_first_prob", cond_first_prob);
    v("negative_steps", negative_steps);
    v("cls_steps", cls_steps);
    v("cls_batch", cls_batch);
    v("cls_lr", cls_lr);
    v("cls_warmup", cls_warmup);
    v("mask_prob", mask_prob);
    v("cls_lengths", cls_lengths);
    v("cls_layers", cls_layers);
    v("cls_heads", cls_heads);
    v("freeze_encoder", freeze_encoder);
    v("holdout_fraction", holdout_fraction);
    v("mode", mode);
    v("rate", rate);
    v("lambda_face", lambda_face);
    v("lambda_nonface", lambda_nonface);
    v("lambda_diff", lambda_diff);
    v("guidance_sign", guidance_sign);
    v("dg_strict_noop", dg_strict_noop);
    v("face_dilation", face_dilation);
    v("d_g", d_g);
    v("sigma_b", sigma_b);
    v("beat_min_separation", beat_min_separation);
    v("diversity_pairs", diversity_pairs);
    v("pose_ae_steps", pose_ae_steps);
  }

  template <typename Visitor>
  void visit(Visitor&& v) const {
    const_cast<RunConfig*>(this)->visit([&](const char* name, auto& field) {
      v(name, static_cast<const std::decay_t<decltype(field)>&>(field));
    });
  }

  /// Range and enum checks; throws ConfigError.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Strict parse: unknown keys are rejected, absent keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& config);

/// Hex FNV-1a 64 of the canonical (sorted-key, compact) JSON dump.
std::string digest_json(const nlohmann::json& j);
std::string config_digest(const RunConfig& config);

/// Digest over the fields that define the regional-classifier architecture and
/// training recipe, excluding the region-masking policy. Face and non-face
/// classifiers of one run share this value.
std::string classifier_architecture_digest(const RunConfig& config);

}  // namespace partsync
