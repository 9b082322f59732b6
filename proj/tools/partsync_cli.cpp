// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

// partsync: command-line driver for the desk-scale pipeline.
//
//   gen-data -> train -> make-negatives -> train-classifier (x2) -> generate / stitch-long -> eval

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "partsync/audio.hpp"
#include "partsync/config.hpp"
#include "partsync/dataset.hpp"
#include "partsync/error.hpp"
#include "partsync/guidance.hpp"
#include "partsync/metrics.hpp"
#include "partsync/pipeline.hpp"
#include "partsync/run_dir.hpp"
#include "partsync/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace partsync;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string run_dir;
  std::string data_dir;
  std::string backbone;
};

RunConfig load_run_config(const Common& c) {
  json j = json::object();
  if (!c.config_path.empty()) {
    if (!fs::exists(c.config_path)) throw MissingInputError("config file not found: " + c.config_path);
    j = to_json(load_config(c.config_path));
  }
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    const auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
    try {
      j[key] = json::parse(value);
    } catch (const json::exception&) {
      j[key] = value;
    }
  }
  return config_from_json(j);
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw MissingInputError(std::string("no ") + what + " given");
  if (!fs::exists(path)) throw MissingInputError(std::string(what) + " not found: " + path);
}

pipeline::Backbone load_backbone(const std::string& path, const RunConfig& cfg) {
  require_file(path, "backbone checkpoint");
  return pipeline::backbone_from_archive(read_archive(path), cfg);
}

SyncClassifier load_classifier(const std::string& path, ClassifierKind expected, const RunConfig& cfg) {
  require_file(path, expected == ClassifierKind::face ? "face classifier checkpoint" : "non-face classifier checkpoint");
  auto [net, kind] = pipeline::classifier_from_archive(read_archive(path), cfg);
  if (kind != expected) throw ConfigError(path + " holds a " + std::string(to_string(kind)) + " classifier");
  return net;
}

Dataset load_dataset(const std::string& dir) {
  if (dir.empty()) throw MissingInputError("no dataset directory given (--data)");
  return read_dataset(dir);
}

json loss_summary(const std::vector<double>& losses) {
  if (losses.empty()) return json::object();
  const auto window = std::max<std::size_t>(1, losses.size() / 10);
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < window; ++i) {
    head += losses[i];
    tail += losses[losses.size() - 1 - i];
  }
  head /= static_cast<double>(window);
  tail /= static_cast<double>(window);
  return {{"first", losses.front()}, {"last", losses.back()}, {"head_mean", head}, {"tail_mean", tail},
          {"relative_drop", head > 0 ? 1.0 - tail / head : 0.0}, {"steps", losses.size()}};
}

json stats_json(const GuidanceStats& s) {
  return {{"solver_calls", s.solver_calls},
          {"gradient_calls", s.gradient_calls},
          {"guided_steps", s.guided_steps},
          {"step_seconds", s.step_seconds}};
}

void cmd_gen_data(const Common& c) {
  const auto cfg = load_run_config(c);
  RunDirectory run(c.run_dir, cfg);
  auto ds = generate_dataset(pipeline::synthetic_options(cfg));
  ds.config_digest = config_digest(cfg);
  const auto out = c.data_dir.empty() ? run.file("dataset") : fs::path(c.data_dir);
  write_dataset(out, ds);
  run.log().info(cat("wrote ", ds.size(), " clips to ", out.string()));
  run.write_report({{"command", "gen-data"}, {"dataset", out.string()}, {"n_clips", ds.size()}});
}

void cmd_train(const Common& c) {
  const auto cfg = load_run_config(c);
  const auto ds = load_dataset(c.data_dir);
  RunDirectory run(c.run_dir, cfg);
  const auto prep = pipeline::prepare(ds, cfg, &run.log());
  auto b = pipeline::train_backbone(prep, ds, cfg, &run.log());
  write_archive(run.file("backbone.psar"), pipeline::backbone_archive(b, cfg));
  run.write_report({{"command", "train"},
                    {"codec_loss", loss_summary(b.codec_losses)},
                    {"denoiser_loss", loss_summary(b.denoiser_losses)},
                    {"pose_ae_loss", loss_summary(b.pose_losses)},
                    {"feature_ckpt_hash", metrics::checkpoint_hash(b.pose_ae)}});
}

void cmd_make_negatives(const Common& c) {
  const auto cfg = load_run_config(c);
  const auto ds = load_dataset(c.data_dir);
  auto b = load_backbone(c.backbone, cfg);
  RunDirectory run(c.run_dir, cfg);
  const auto prep = pipeline::prepare(ds, cfg, &run.log());
  const auto latents = pipeline::encode_latents(b.codec, prep.frames);
  DdimSolver solver(b.denoiser, pipeline::schedule_for(cfg), cfg.negative_steps);
  const auto neg = make_negative_samples(solver, latents, prep.audio, cfg.seed + 7);
  Archive a;
  a.meta = {{"kind", "negatives"}, {"config_digest", config_digest(cfg)}, {"n", neg.generated.size(0)}};
  a.put("generated", neg.generated);
  a.put("reference_index", neg.reference_index);
  a.put("labels", neg.labels);
  write_archive(run.file("negatives.psar"), a);
  run.write_report({{"command", "make-negatives"}, {"n_negatives", neg.generated.size(0)},
                    {"solver_calls", solver.calls()}});
}

void cmd_train_classifier(const Common& c, const std::string& kind_name, const std::string& negatives) {
  const auto kind = classifier_kind_from_string(kind_name);
  const auto cfg = load_run_config(c);
  const auto ds = load_dataset(c.data_dir);
  require_file(negatives, "negative samples (run make-negatives first)");
  auto b = load_backbone(c.backbone, cfg);
  RunDirectory run(c.run_dir, cfg);
  const auto prep = pipeline::prepare(ds, cfg, &run.log());
  const auto neg = read_archive(negatives);
  ClassifierData data{pipeline::encode_latents(b.codec, prep.frames), neg.get("generated"), prep.audio, prep.face};
  if (data.generated.sizes() != data.real.sizes()) throw FormatError("negatives do not match the dataset");
  auto r = pipeline::train_regional_classifier(kind, b.denoiser, data, cfg, &run.log());
  write_archive(run.file("classifier.psar"), pipeline::classifier_archive(r.net, kind, cfg));
  run.write_report({{"command", "train-classifier"},
                    {"kind", std::string(to_string(kind))},
                    {"loss", loss_summary(r.losses)},
                    {"heldout_accuracy", r.holdout.accuracy},
                    {"heldout_mean_real", r.holdout.mean_real},
                    {"heldout_mean_generated", r.holdout.mean_generated},
                    {"heldout_pairs", r.holdout.n_pairs},
                    {"architecture_digest", classifier_architecture_digest(cfg)}});
}

/// Latents [F, C, h, w] and u8 frames [F, 3, H, W] with the run's config digest.
void write_video(const fs::path& path, const torch::Tensor& latents, const torch::Tensor& frames,
                 const RunConfig& cfg) {
  Archive a;
  a.meta = {{"kind", "video"}, {"config_digest", config_digest(cfg)}, {"frames", latents.size(0)}};
  a.put("latents", latents.contiguous());
  a.put("frames", torch::round(frames.clamp(0, 1) * 255).to(torch::kUInt8).contiguous());
  write_archive(path, a);
}

struct GuidanceFiles {
  std::string face, nonface;
};

GuidanceClassifiers load_guidance(const GuidanceFiles& f, const RunConfig& cfg) {
  GuidanceClassifiers g;
  if (cfg.mode == "off") return g;
  g.face = load_classifier(f.face, ClassifierKind::face, cfg);
  g.nonface = load_classifier(f.nonface, ClassifierKind::nonface, cfg);
  return g;
}

void cmd_generate(const Common& c, const GuidanceFiles& files, std::int64_t clip) {
  const auto cfg = load_run_config(c);
  const auto ds = load_dataset(c.data_dir);
  auto b = load_backbone(c.backbone, cfg);
  auto classifiers = load_guidance(files, cfg);
  RunDirectory run(c.run_dir, cfg);
  const auto prep = pipeline::prepare(ds, cfg, &run.log());
  const auto latents = pipeline::encode_latents(b.codec, prep.frames);
  const auto r = pipeline::generate_clip(b, classifiers, prep, latents, clip, pipeline::guidance_config(cfg),
                                         cfg.T_infer, pipeline::schedule_for(cfg), cfg.seed);
  write_video(run.file("video.psar"), r.latents.squeeze(0), r.frames.squeeze(0), cfg);
  auto report = stats_json(r.stats);
  report["command"] = "generate";
  report["mode"] = cfg.mode;
  report["clip"] = clip;
  report["seed"] = cfg.seed;
  report["sampling_seconds"] = r.sampling_seconds;
  report["decoding_seconds"] = r.decoding_seconds;
  report["segments"] = 1;
  run.write_report(report);
}

void cmd_stitch_long(const Common& c, const GuidanceFiles& files, std::int64_t clip, int segments) {
  const auto cfg = load_run_config(c);
  if (segments < 2) throw ConfigError("stitch-long needs at least two segments");
  const auto ds = load_dataset(c.data_dir);
  auto b = load_backbone(c.backbone, cfg);
  auto classifiers = load_guidance(files, cfg);
  RunDirectory run(c.run_dir, cfg);
  const auto prep = pipeline::prepare(ds, cfg, &run.log());
  const auto latents = pipeline::encode_latents(b.codec, prep.frames);
  const int L = cfg.frames;
  const auto total = static_cast<std::int64_t>(segments) * (L - 1) + 1;
  const auto n_src = (total + L - 1) / L;
  if (clip < 0 || clip + n_src > ds.size()) throw ConfigError("not enough clips after --clip for the audio track");
  const auto audio = prep.audio.narrow(0, clip, n_src).flatten(0, 1).narrow(0, 0, total);
  const auto face = prep.face.narrow(0, clip, n_src).flatten(0, 1).narrow(0, 0, total);
  DdimSolver solver(b.denoiser, pipeline::schedule_for(cfg), cfg.T_infer);
  const auto t0 = std::chrono::steady_clock::now();
  auto lv = generate_long(solver, classifiers, latents[clip][0], audio, face, L, pipeline::guidance_config(cfg),
                          cfg.seed);
  const auto t1 = std::chrono::steady_clock::now();
  const auto frames = pipeline::decode_latents(b.codec, lv.frames.unsqueeze(0)).squeeze(0);
  const auto t2 = std::chrono::steady_clock::now();
  write_video(run.file("video.psar"), lv.frames, frames, cfg);
  auto report = stats_json(lv.stats);
  report["command"] = "stitch-long";
  report["segments"] = lv.segments.size();
  report["unique_frames"] = lv.frames.size(0);
  report["sampling_seconds"] = std::chrono::duration<double>(t1 - t0).count();
  report["decoding_seconds"] = std::chrono::duration<double>(t2 - t1).count();
  run.write_report(report);
}

std::vector<par::PoseSequence> read_pose_dir(const fs::path& dir, int width, int height, double fps) {
  if (!fs::is_directory(dir)) throw MissingInputError("pose directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<par::PoseSequence> out;
  for (const auto& f : files) out.push_back(read_pose_jsonl(f, width, height, fps));
  if (out.empty()) throw MissingInputError("no pose files in " + dir.string());
  return out;
}

void cmd_eval(const Common& c, const std::string& real_poses, const std::string& gen_poses,
              const std::string& audio_dir, const std::vector<std::string>& runs) {
  const auto cfg = load_run_config(c);
  auto b = load_backbone(c.backbone, cfg);
  RunDirectory run(c.run_dir, cfg);
  const auto hash = metrics::checkpoint_hash(b.pose_ae);
  const auto digest = config_digest(cfg);
  json out = {{"command", "eval"}, {"feature_ckpt_hash", hash}, {"metrics", json::array()}};

  if (!gen_poses.empty()) {
    const auto gen = read_pose_dir(gen_poses, cfg.width, cfg.height, cfg.fps);
    auto gen_feat = metrics::gesture_features(b.pose_ae, metrics::pose_vectors(gen));
    if (!real_poses.empty()) {
      const auto real = read_pose_dir(real_poses, cfg.width, cfg.height, cfg.fps);
      auto real_feat = metrics::gesture_features(b.pose_ae, metrics::pose_vectors(real));
      out["metrics"].push_back(metrics::metric_report("fgd", metrics::fgd(real_feat, gen_feat, {}, &run.log()),
                                                      gen_feat.rows(), hash, digest));
    }
    out["metrics"].push_back(metrics::metric_report(
        "diversity", metrics::diversity(gen_feat, cfg.diversity_pairs, cfg.seed), gen_feat.rows(), hash, digest));
    if (!audio_dir.empty()) {
      std::vector<fs::path> wavs;
      for (const auto& e : fs::directory_iterator(audio_dir)) {
        if (e.path().extension() == ".wav") wavs.push_back(e.path());
      }
      std::sort(wavs.begin(), wavs.end());
      if (wavs.size() != gen.size()) throw ConfigError("eval: audio and pose file counts differ");
      double sum = 0;
      std::int64_t n = 0;
      for (std::size_t i = 0; i < gen.size(); ++i) {
        const auto wav = read_wav(wavs[i]);
        const auto samples = wav.as_float();
        const auto energies = frame_energies(samples, wav.sample_rate, cfg.fps, static_cast<int>(gen[i].frames.size()));
        metrics::BeatTrack beats{metrics::audio_beats(energies, cfg.fps, cfg.beat_min_separation),
                                 metrics::motion_beats(gen[i])};
        if (beats.motion_beats.empty()) continue;
        sum += metrics::bas(beats, cfg.sigma_b, &run.log());
        ++n;
      }
      if (n > 0) out["metrics"].push_back(metrics::metric_report("bas", sum / n, n, hash, digest));
    }
  }
  if (!runs.empty()) {
    std::vector<metrics::RunTiming> timings;
    for (const auto& r : runs) {
      const auto rep = read_json(fs::path(r) / "report.json");
      const double segs = rep.value("segments", 1.0);
      timings.push_back({rep.at("sampling_seconds").get<double>() / segs, rep.at("decoding_seconds").get<double>() / segs});
    }
    const auto tc = metrics::time_cost(timings);
    auto m = metrics::metric_report("time_cost", static_cast<double>(tc.rounded), static_cast<std::int64_t>(runs.size()),
                                    hash, digest);
    m["mean_sampling_seconds"] = tc.mean_sampling;
    m["mean_decoding_seconds"] = tc.mean_decoding;
    m["mean_total_seconds"] = tc.mean_total;
    out["metrics"].push_back(m);
  }
  run.write_report(out);
}

void cmd_compare(const std::vector<std::string>& reports) {
  if (reports.size() != 2) throw ConfigError("--compare expects two report files");
  const auto a = read_json(reports[0]), b = read_json(reports[1]);
  if (a.value("feature_ckpt_hash", "") != b.value("feature_ckpt_hash", "")) {
    throw ConfigError("reports use different feature checkpoints (" + a.value("feature_ckpt_hash", "?") + " vs " +
                      b.value("feature_ckpt_hash", "?") + "); refusing to compare");
  }
  for (const auto& ma : a.at("metrics")) {
    for (const auto& mb : b.at("metrics")) {
      if (ma.at("metric") == mb.at("metric")) {
        std::cout << ma.at("metric").get<std::string>() << ": " << ma.at("value").get<double>() << " vs "
                  << mb.at("value").get<double>() << "\n";
      }
    }
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return static_cast<int>(ExitCode::config_error);
  if (dynamic_cast<const MissingInputError*>(&e)) return static_cast<int>(ExitCode::missing_input);
  if (dynamic_cast<const NumericError*>(&e)) return static_cast<int>(ExitCode::numeric_failure);
  return static_cast<int>(ExitCode::failure);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partsync: parts-aware audio-driven video diffusion at desk scale"};
  app.require_subcommand(1);
  Common c;
  const auto add_common = [&](CLI::App* sub, bool needs_data, bool needs_backbone) {
    sub->add_option("--config", c.config_path, "JSON run config");
    sub->add_option("--set", c.overrides, "Config override key=value (repeatable)");
    sub->add_option("--run-dir", c.run_dir, "Run directory")->required();
    if (needs_data) sub->add_option("--data", c.data_dir, "Dataset directory");
    if (needs_backbone) sub->add_option("--backbone", c.backbone, "Backbone checkpoint (backbone.psar)");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic audio-motion dataset");
  add_common(gen, false, false);
  gen->add_option("--out", c.data_dir, "Dataset output directory (default RUN_DIR/dataset)");

  auto* train = app.add_subcommand("train", "Train the latent codec, denoiser and pose autoencoder");
  add_common(train, true, false);

  auto* negs = app.add_subcommand("make-negatives", "Sample one generated clip per real clip");
  add_common(negs, true, true);

  std::string kind, negatives;
  auto* tcls = app.add_subcommand("train-classifier", "Train a regional sync classifier");
  add_common(tcls, true, true);
  tcls->add_option("--kind", kind, "face or non-face")->required()->check(CLI::IsMember({"face", "non-face"}));
  tcls->add_option("--negatives", negatives, "negatives.psar from make-negatives");

  GuidanceFiles files;
  std::int64_t clip = 0;
  int segments = 4;
  std::optional<std::string> mode;
  std::optional<double> rate, lf, lnf, ld;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  const auto add_guidance = [&](CLI::App* sub) {
    sub->add_option("--face-classifier", files.face, "Face classifier checkpoint");
    sub->add_option("--nonface-classifier", files.nonface, "Non-face classifier checkpoint");
    sub->add_option("--clip", clip, "Dataset clip giving reference, audio and face boxes");
    sub->add_option("--mode", mode, "off, sg or dg")->check(CLI::IsMember({"off", "sg", "dg"}));
    sub->add_option("--rate", rate, "Fraction of solver steps that are guided");
    sub->add_option("--lambda-face", lf, "Face guidance weight");
    sub->add_option("--lambda-nonface", lnf, "Non-face guidance weight");
    sub->add_option("--lambda-diff", ld, "Differential guidance weight");
    sub->add_option("--steps", steps, "Solver steps");
    sub->add_option("--seed", seed, "Sampling seed");
  };
  auto* generate = app.add_subcommand("generate", "Sample one video segment");
  add_common(generate, true, true);
  add_guidance(generate);
  auto* stitch = app.add_subcommand("stitch-long", "Sample chained segments into one long video");
  add_common(stitch, true, true);
  add_guidance(stitch);
  stitch->add_option("--segments", segments, "Number of chained segments");

  std::string real_poses, gen_poses, audio_dir;
  std::vector<std::string> runs, compare;
  auto* eval = app.add_subcommand("eval", "Compute FGD, diversity, BAS and time cost");
  eval->add_option("--config", c.config_path, "JSON run config");
  eval->add_option("--set", c.overrides, "Config override key=value (repeatable)");
  eval->add_option("--run-dir", c.run_dir, "Run directory");
  eval->add_option("--backbone", c.backbone, "Backbone checkpoint holding the pose autoencoder");
  eval->add_option("--real-poses", real_poses, "Directory of real pose JSONL files");
  eval->add_option("--gen-poses", gen_poses, "Directory of generated pose JSONL files");
  eval->add_option("--audio", audio_dir, "Directory of WAV files paired with --gen-poses");
  eval->add_option("--runs", runs, "Generation run directories for time cost");
  eval->add_option("--compare", compare, "Compare two eval reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config_error);
  }

  // Guidance flags are config overrides with their own spelling.
  const auto flag = [&](const char* key, const auto& value) {
    if (value) c.overrides.push_back(std::string(key) + "=" + json(*value).dump());
  };
  flag("mode", mode);
  flag("rate", rate);
  flag("lambda_face", lf);
  flag("lambda_nonface", lnf);
  flag("lambda_diff", ld);
  flag("T_infer", steps);
  flag("seed", seed);

  try {
    if (gen->parsed()) cmd_gen_data(c);
    else if (train->parsed()) cmd_train(c);
    else if (negs->parsed()) cmd_make_negatives(c);
    else if (tcls->parsed()) cmd_train_classifier(c, kind, negatives);
    else if (generate->parsed()) cmd_generate(c, files, clip);
    else if (stitch->parsed()) cmd_stitch_long(c, files, clip, segments);
    else if (eval->parsed()) {
      if (!compare.empty()) {
        cmd_compare(compare);
      } else {
        if (c.run_dir.empty()) throw ConfigError("eval needs --run-dir");
        cmd_eval(c, real_poses, gen_poses, audio_dir, runs);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "partsync: error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return static_cast<int>(ExitCode::ok);
}
