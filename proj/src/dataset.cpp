// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "partsync/audio.hpp"
#include "partsync/error.hpp"
#include "partsync/tensor_io.hpp"

namespace partsync {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<float> Dataset::clip_audio(std::int64_t i) const {
  const auto row = audio[i].contiguous();
  std::vector<float> out(static_cast<std::size_t>(row.numel()));
  const auto* p = row.data_ptr<std::int16_t>();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<float>(p[k]) / 32768.0f;
  return out;
}

Dataset generate_dataset(const SyntheticOptions& options) {
  if (options.n_clips < 1) throw ConfigError("dataset needs at least one clip");
  Dataset ds;
  ds.options = options;
  const int spf = samples_per_frame(options);
  ds.frames = torch::empty({options.n_clips, options.frames, 3, options.height, options.width}, torch::kUInt8);
  ds.audio = torch::empty({options.n_clips, static_cast<std::int64_t>(options.frames) * spf}, torch::kInt16);
  for (int i = 0; i < options.n_clips; ++i) {
    auto clip = make_synthetic_clip(options, i);
    ds.frames[i].copy_(torch::round(clip.frames * 255).to(torch::kUInt8));
    ds.audio[i].copy_(torch::from_blob(clip.audio.data(), {static_cast<std::int64_t>(clip.audio.size())}, torch::kInt16));
    ds.poses.push_back(std::move(clip.pose));
    ds.faces.push_back(std::move(clip.faces));
  }
  if (options.n_clips >= 2) {
    std::mt19937_64 rng(options.seed ^ 0x6d69736cULL);
    ds.misaligned = derangement(options.n_clips, rng);
  } else {
    ds.misaligned = {0};
  }
  return ds;
}

std::string clip_stem(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%05lld", static_cast<long long>(index));
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  const auto text = j.dump(2) + "\n";
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw MissingInputError("missing file " + path.string());
  const auto bytes = read_file_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

namespace {

void write_lines(const fs::path& path, const std::vector<json>& lines) {
  std::string text;
  for (const auto& l : lines) text += l.dump() + "\n";
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<json> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("missing file " + path.string());
  std::vector<json> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

void write_pose_jsonl(const fs::path& path, const par::PoseSequence& pose) {
  std::vector<json> lines;
  for (std::size_t f = 0; f < pose.frames.size(); ++f) {
    json kps = json::array();
    for (const auto& k : pose.frames[f]) {
      kps.push_back({{"x", k.x}, {"y", k.y}, {"confidence", k.confidence}, {"region", par::to_string(k.region)}});
    }
    lines.push_back({{"frame_index", f}, {"keypoints", kps}});
  }
  write_lines(path, lines);
}

par::PoseSequence read_pose_jsonl(const fs::path& path, int width, int height, double fps) {
  par::PoseSequence pose;
  pose.width = width;
  pose.height = height;
  pose.fps = fps;
  for (const auto& l : read_lines(path)) {
    par::KeypointSet set;
    for (const auto& k : l.at("keypoints")) {
      set.push_back({k.at("x").get<double>(), k.at("y").get<double>(), k.at("confidence").get<double>(),
                     par::region_from_string(k.at("region").get<std::string>())});
    }
    pose.frames.push_back(std::move(set));
  }
  return pose;
}

void write_face_jsonl(const fs::path& path, const FaceTrack& faces) {
  std::vector<json> lines;
  for (const auto& b : faces) {
    if (b) lines.push_back({{"frame_index", b->frame_index}, {"x0", b->x0}, {"y0", b->y0}, {"x1", b->x1}, {"y1", b->y1}});
  }
  write_lines(path, lines);
}

FaceTrack read_face_jsonl(const fs::path& path, int frames) {
  FaceTrack out(static_cast<std::size_t>(frames));
  for (const auto& l : read_lines(path)) {
    FaceBox b{l.at("frame_index").get<int>(), l.at("x0").get<double>(), l.at("y0").get<double>(),
              l.at("x1").get<double>(), l.at("y1").get<double>()};
    if (b.frame_index < 0 || b.frame_index >= frames) {
      throw FormatError(path.string() + ": frame_index " + std::to_string(b.frame_index) + " out of range");
    }
    out[b.frame_index] = b;
  }
  return out;
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir / "audio");
  fs::create_directories(dir / "poses");
  fs::create_directories(dir / "faces");
  const auto& o = ds.options;
  json manifest = {{"format", "partsync-dataset"},
                   {"version", 1},
                   {"n_clips", o.n_clips},
                   {"frames", o.frames},
                   {"height", o.height},
                   {"width", o.width},
                   {"fps", o.fps},
                   {"sample_rate", o.sample_rate},
                   {"seed", o.seed},
                   {"speed_gain", o.speed_gain},
                   {"config_digest", ds.config_digest}};
  write_json(dir / "manifest.json", manifest);
  write_tensor(dir / "frames.pst", ds.frames);
  write_tensor(dir / "audio.pst", ds.audio);
  write_json(dir / "misaligned.json", json{{"audio_of", ds.misaligned}});
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    const auto stem = clip_stem(i);
    const auto row = ds.audio[i].contiguous();
    WavData wav{o.sample_rate, std::vector<std::int16_t>(row.data_ptr<std::int16_t>(),
                                                         row.data_ptr<std::int16_t>() + row.numel())};
    write_wav(dir / "audio" / (stem + ".wav"), wav);
    write_pose_jsonl(dir / "poses" / (stem + ".jsonl"), ds.poses[i]);
    write_face_jsonl(dir / "faces" / (stem + ".jsonl"), ds.faces[i]);
  }
}

Dataset read_dataset(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw MissingInputError("no dataset manifest in " + dir.string());
  const auto m = read_json(dir / "manifest.json");
  Dataset ds;
  auto& o = ds.options;
  o.n_clips = m.at("n_clips").get<int>();
  o.frames = m.at("frames").get<int>();
  o.height = m.at("height").get<int>();
  o.width = m.at("width").get<int>();
  o.fps = m.at("fps").get<double>();
  o.sample_rate = m.at("sample_rate").get<int>();
  o.seed = m.at("seed").get<std::uint64_t>();
  o.speed_gain = m.at("speed_gain").get<double>();
  ds.config_digest = m.value("config_digest", "");
  ds.frames = read_tensor(dir / "frames.pst");
  ds.audio = read_tensor(dir / "audio.pst");
  if (ds.frames.scalar_type() != torch::kUInt8 || ds.frames.dim() != 5 || ds.frames.size(0) != o.n_clips ||
      ds.frames.size(1) != o.frames) {
    throw FormatError("frames.pst does not match the manifest");
  }
  if (ds.audio.scalar_type() != torch::kInt16 || ds.audio.size(0) != o.n_clips) {
    throw FormatError("audio.pst does not match the manifest");
  }
  ds.misaligned = read_json(dir / "misaligned.json").at("audio_of").get<std::vector<int>>();
  for (int i = 0; i < o.n_clips; ++i) {
    const auto stem = clip_stem(i);
    ds.poses.push_back(read_pose_jsonl(dir / "poses" / (stem + ".jsonl"), o.width, o.height, o.fps));
    ds.faces.push_back(read_face_jsonl(dir / "faces" / (stem + ".jsonl"), o.frames));
  }
  return ds;
}

}  // namespace partsync
