// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "partsync/classifier_data.hpp"
#include "partsync/par_mask.hpp"
#include "partsync/synthetic.hpp"

namespace partsync {

/// In-memory clip corpus, as generated or as read back from disk.
struct Dataset {
  SyntheticOptions options;
  torch::Tensor frames;  // [N, F, 3, H, W] uint8
  torch::Tensor audio;   // [N, F * samples_per_frame] int16
  std::vector<par::PoseSequence> poses;
  std::vector<FaceTrack> faces;
  std::vector<int> misaligned;  // clip i is paired with audio of clip misaligned[i]
  std::string config_digest;

  std::int64_t size() const { return frames.size(0); }
  /// Frames as float in [0, 1].
  torch::Tensor frames_float() const { return frames.to(torch::kFloat32) / 255.0; }
  std::vector<float> clip_audio(std::int64_t i) const;
};

Dataset generate_dataset(const SyntheticOptions& options);

/// Layout: manifest.json, frames.pst, audio.pst, misaligned.json and per clip
/// audio/clip_NNNNN.wav, poses/clip_NNNNN.jsonl, faces/clip_NNNNN.jsonl.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
/// Throws MissingInputError when the manifest is absent.
Dataset read_dataset(const std::filesystem::path& dir);

std::string clip_stem(std::int64_t index);

/// One JSON object per frame: {"frame", "keypoints": [{x, y, confidence, region}]}.
void write_pose_jsonl(const std::filesystem::path& path, const par::PoseSequence& pose);
par::PoseSequence read_pose_jsonl(const std::filesystem::path& path, int width, int height, double fps);

/// One JSON object per box: {frame_index, x0, y0, x1, y1}.
void write_face_jsonl(const std::filesystem::path& path, const FaceTrack& faces);
FaceTrack read_face_jsonl(const std::filesystem::path& path, int frames);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace partsync
