// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "partsync/error.hpp"

namespace partsync {

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  config.visit([&](const char* name, const auto& field) { j[name] = field; });
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig config;
  std::set<std::string> known;
  config.visit([&](const char* name, auto& field) {
    known.insert(name);
    if (!j.contains(name)) return;
    try {
      j.at(name).get_to(field);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config key '") + name + "': " + e.what());
    }
  });
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  config.validate();
  return config;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(n_clips >= 1, "n_clips >= 1");
  require(frames >= 1, "frames >= 1");
  require(height % 8 == 0 && width % 8 == 0 && height > 0 && width > 0,
          "height and width must be positive multiples of 8");
  require(fps > 0, "fps > 0");
  require(sample_rate > 0, "sample_rate > 0");
  require(tau >= 0 && tau <= 1, "0 <= tau <= 1");
  require(r > 0, "r > 0");
  require(omega1 >= omega2 && omega2 >= 1, "omega1 >= omega2 >= 1");
  require(blur_sigma > 0, "blur_sigma > 0");
  require(d_a >= 1, "d_a >= 1");
  require(m >= 0, "m >= 0");
  require(T_train >= 2, "T_train >= 2");
  require(schedule == "linear-beta" || schedule == "cosine", "schedule in {linear-beta, cosine}");
  require(T_infer >= 1 && T_infer < T_train, "1 <= T_infer < T_train");
  require(latent_channels >= 1, "latent_channels >= 1");
  require(model_width >= 8 && model_width % 8 == 0, "model_width multiple of 8");
  require(codec_width >= 8 && codec_width % 8 == 0, "codec_width multiple of 8");
  require(batch_size >= 1 && codec_batch >= 1 && cls_batch >= 1, "batch sizes >= 1");
  require(cond_first_prob >= 0 && cond_first_prob <= 1, "0 <= cond_first_prob <= 1");
  require(negative_steps >= 1 && negative_steps < T_train, "1 <= negative_steps < T_train");
  require(mask_prob >= 0 && mask_prob <= 1, "0 <= mask_prob <= 1");
  require(!cls_lengths.empty(), "cls_lengths non-empty");
  for (int l : cls_lengths) require(l >= 1, "cls_lengths entries >= 1");
  require(cls_layers >= 1 && cls_heads >= 1, "cls_layers, cls_heads >= 1");
  require((2 * model_width) % cls_heads == 0, "classifier width divisible by cls_heads");
  require(holdout_fraction >= 0 && holdout_fraction < 1, "0 <= holdout_fraction < 1");
  require(mode == "off" || mode == "sg" || mode == "dg", "mode in {off, sg, dg}");
  require(rate >= 0 && rate <= 1, "0 <= rate <= 1");
  require(lambda_face >= 0 && lambda_nonface >= 0 && lambda_diff >= 0, "guidance weights >= 0");
  require(guidance_sign == "ascend" || guidance_sign == "descend",
          "guidance_sign in {ascend, descend}");
  require(face_dilation >= 0, "face_dilation >= 0");
  require(d_g >= 1, "d_g >= 1");
  require(sigma_b > 0, "sigma_b > 0");
  require(beat_min_separation >= 0, "beat_min_separation >= 0");
  require(diversity_pairs >= 1, "diversity_pairs >= 1");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const RunConfig& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
}

std::string digest_json(const nlohmann::json& j) {
  const auto text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_digest(const RunConfig& config) { return digest_json(to_json(config)); }

std::string classifier_architecture_digest(const RunConfig& config) {
  nlohmann::json j;
  j["latent_channels"] = config.latent_channels;
  j["model_width"] = config.model_width;
  j["d_a"] = config.d_a;
  j["m"] = config.m;
  j["T_train"] = config.T_train;
  j["schedule"] = config.schedule;
  j["cls_layers"] = config.cls_layers;
  j["cls_heads"] = config.cls_heads;
  j["cls_lengths"] = config.cls_lengths;
  j["cls_steps"] = config.cls_steps;
  j["cls_batch"] = config.cls_batch;
  j["cls_lr"] = config.cls_lr;
  j["cls_warmup"] = config.cls_warmup;
  j["freeze_encoder"] = config.freeze_encoder;
  return digest_json(j);
}

}  // namespace partsync
