// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "partsync/audio.hpp"
#include "partsync/error.hpp"
#include "partsync/univdm.hpp"

namespace partsync::pipeline {

using nlohmann::json;

SyntheticOptions synthetic_options(const RunConfig& cfg) {
  SyntheticOptions o;
  o.n_clips = cfg.n_clips;
  o.frames = cfg.frames;
  o.height = cfg.height;
  o.width = cfg.width;
  o.fps = cfg.fps;
  o.sample_rate = cfg.sample_rate;
  o.seed = cfg.seed;
  return o;
}

DenoiserOptions denoiser_options(const RunConfig& cfg) {
  DenoiserOptions o;
  o.latent_channels = cfg.latent_channels;
  o.width = cfg.model_width;
  o.audio_dim = cfg.d_a;
  return o;
}

ClassifierOptions classifier_options(const RunConfig& cfg) {
  ClassifierOptions o;
  o.encoder = denoiser_options(cfg);
  o.window = cfg.m;
  o.layers = cfg.cls_layers;
  o.heads = cfg.cls_heads;
  o.max_video_tokens = std::max(16, cfg.frames);
  o.max_audio_tokens = std::max(16, cfg.frames);
  return o;
}

GuidanceConfig guidance_config(const RunConfig& cfg) {
  GuidanceConfig g;
  g.mode = guidance_mode_from_string(cfg.mode);
  g.lambda_face = cfg.lambda_face;
  g.lambda_nonface = cfg.lambda_nonface;
  g.lambda_diff = cfg.lambda_diff;
  g.rate = cfg.rate;
  g.sign = guidance_sign_from_string(cfg.guidance_sign);
  g.dg_strict_noop = cfg.dg_strict_noop;
  return g;
}

par::ParParams par_params(const RunConfig& cfg) {
  par::ParParams p;
  p.tau = cfg.tau;
  p.radius = cfg.r;
  p.omega1 = cfg.omega1;
  p.omega2 = cfg.omega2;
  p.blur_sigma = cfg.blur_sigma;
  return p;
}

NoiseSchedule schedule_for(const RunConfig& cfg) {
  return make_schedule(cfg.T_train, schedule_kind_from_string(cfg.schedule));
}

torch::Tensor clip_audio_tokens(std::span<const float> samples, int frames, const RunConfig& cfg) {
  const LogBandEnergyExtractor extractor(cfg.d_a);
  // Log band energies span roughly [-14, 2]; a fixed affine map keeps them near unit scale.
  const auto per_frame = (extractor.extract(samples, cfg.sample_rate, cfg.fps, frames) + 6.0) / 4.0;
  return window_audio(per_frame, cfg.m).tokens();
}

Prepared prepare(const Dataset& ds, const RunConfig& cfg, Logger* log) {
  const auto N = ds.size();
  const int Fr = ds.options.frames, H = ds.options.height, W = ds.options.width;
  if (H % kLatentFactor != 0 || W % kLatentFactor != 0) {
    throw ConfigError("frame size must be a multiple of the latent factor 8");
  }
  Prepared p;
  p.frames = ds.frames_float();
  std::vector<torch::Tensor> audio, masks, faces;
  const auto params = par_params(cfg);
  for (std::int64_t i = 0; i < N; ++i) {
    const auto samples = ds.clip_audio(i);
    audio.push_back(clip_audio_tokens(samples, Fr, cfg));
    const auto m = par::downsample_mask(par::build_reweight_masks(ds.poses[i], params), kLatentFactor);
    masks.push_back(torch::tensor(m.weights, torch::kFloat64).view({m.frames, m.height, m.width}).to(torch::kFloat32));
    faces.push_back(face_mask_latent(ds.faces[i], Fr, H, W, kLatentFactor, cfg.face_dilation, log));
  }
  p.audio = torch::stack(audio);
  p.par_masks = torch::stack(masks);
  p.face = torch::stack(faces);
  return p;
}

torch::Tensor encode_latents(ConvAutoencoder& codec, const torch::Tensor& frames) {
  torch::NoGradGuard no_grad;
  const auto N = frames.size(0), Fr = frames.size(1);
  std::vector<torch::Tensor> parts;
  const auto flat = frames.flatten(0, 1);
  for (std::int64_t s = 0; s < flat.size(0); s += 256) {
    parts.push_back(codec->encode(flat.narrow(0, s, std::min<std::int64_t>(256, flat.size(0) - s))));
  }
  return torch::cat(parts, 0).unflatten(0, {N, Fr});
}

torch::Tensor decode_latents(ConvAutoencoder& codec, const torch::Tensor& latents) {
  torch::NoGradGuard no_grad;
  const auto N = latents.size(0), Fr = latents.size(1);
  return codec->decode(latents.flatten(0, 1)).unflatten(0, {N, Fr});
}

Backbone make_backbone(const RunConfig& cfg, int pose_dim) {
  Backbone b;
  b.codec = ConvAutoencoder(cfg.latent_channels, cfg.codec_width);
  b.denoiser = Denoiser(denoiser_options(cfg));
  b.pose_ae = metrics::PoseAutoencoder(pose_dim, cfg.d_g);
  b.codec->eval();
  b.denoiser->eval();
  b.pose_ae->eval();
  return b;
}

Backbone train_backbone(const Prepared& prep, const Dataset& ds, const RunConfig& cfg, Logger* log) {
  const auto poses = metrics::pose_vectors(ds.poses);
  torch::manual_seed(cfg.seed);
  auto b = make_backbone(cfg, static_cast<int>(poses.size(1)));

  CodecTrainOptions co;
  co.steps = cfg.codec_steps;
  co.batch = cfg.codec_batch;
  co.lr = cfg.codec_lr;
  co.seed = cfg.seed;
  b.codec_losses = train_codec(b.codec, prep.frames.flatten(0, 1), co);
  if (log != nullptr && !b.codec_losses.empty()) {
    log->info(cat("codec: loss ", b.codec_losses.front(), " -> ", b.codec_losses.back()));
  }

  DenoiserTrainData data{encode_latents(b.codec, prep.frames), prep.audio, prep.par_masks};
  DenoiserTrainOptions dopt;
  dopt.steps = cfg.train_steps;
  dopt.batch = cfg.batch_size;
  dopt.lr = cfg.lr;
  dopt.cond_first_prob = cfg.cond_first_prob;
  dopt.seed = cfg.seed + 1;
  b.denoiser_losses = train_denoiser(b.denoiser, data, schedule_for(cfg), dopt);
  if (log != nullptr && !b.denoiser_losses.empty()) {
    log->info(cat("denoiser: loss ", b.denoiser_losses.front(), " -> ", b.denoiser_losses.back()));
  }

  b.pose_losses = metrics::train_pose_autoencoder(b.pose_ae, poses, cfg.pose_ae_steps, cfg.seed + 2);
  if (log != nullptr && !b.pose_losses.empty()) {
    log->info(cat("pose autoencoder: loss ", b.pose_losses.front(), " -> ", b.pose_losses.back()));
  }
  return b;
}

namespace {

json backbone_architecture(const RunConfig& cfg, std::int64_t pose_dim) {
  return {{"latent_channels", cfg.latent_channels}, {"model_width", cfg.model_width},
          {"codec_width", cfg.codec_width},         {"d_a", cfg.d_a},
          {"m", cfg.m},                             {"d_g", cfg.d_g},
          {"pose_dim", pose_dim}};
}

}  // namespace

Archive backbone_archive(const Backbone& b, const RunConfig& cfg) {
  Archive a;
  a.meta = {{"kind", "univdm"},
            {"config_digest", config_digest(cfg)},
            {"architecture", backbone_architecture(cfg, b.pose_ae->input_dim())}};
  export_module(*b.codec, "codec", a);
  export_module(*b.denoiser, "denoiser", a);
  export_module(*b.pose_ae, "pose_ae", a);
  return a;
}

Backbone backbone_from_archive(const Archive& a, const RunConfig& cfg) {
  if (a.meta.value("kind", "") != "univdm") throw FormatError("checkpoint is not a backbone checkpoint");
  const auto pose_dim = a.meta.at("architecture").at("pose_dim").get<std::int64_t>();
  if (a.meta.at("architecture") != backbone_architecture(cfg, pose_dim)) {
    throw ConfigError("backbone checkpoint architecture differs from the run config");
  }
  auto b = make_backbone(cfg, static_cast<int>(pose_dim));
  import_module(*b.codec, "codec", a);
  import_module(*b.denoiser, "denoiser", a);
  import_module(*b.pose_ae, "pose_ae", a);
  return b;
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> split_holdout(std::int64_t n, double fraction,
                                                                                std::uint64_t seed) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed ^ 0x686f6c64ULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto held = static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(n)));
  held = std::clamp<std::int64_t>(held, n > 1 ? 1 : 0, std::max<std::int64_t>(0, n - 1));
  std::vector<std::int64_t> test(idx.begin(), idx.begin() + held), train(idx.begin() + held, idx.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

ClassifierResult train_regional_classifier(ClassifierKind kind, Denoiser& denoiser, const ClassifierData& data,
                                           const RunConfig& cfg, Logger* log) {
  torch::manual_seed(cfg.seed + 17);
  ClassifierResult r;
  r.net = SyncClassifier(classifier_options(cfg));
  r.net->init_encoder_from(denoiser);
  const auto [train, held] = split_holdout(data.real.size(0), cfg.holdout_fraction, cfg.seed);
  ClassifierTrainOptions o;
  o.kind = kind;
  o.steps = cfg.cls_steps;
  o.batch = cfg.cls_batch;
  o.lr = cfg.cls_lr;
  o.warmup = cfg.cls_warmup;
  o.mask_prob = cfg.mask_prob;
  o.lengths = cfg.cls_lengths;
  o.freeze_encoder = cfg.freeze_encoder;
  o.seed = cfg.seed + (kind == ClassifierKind::face ? 101 : 202);
  const auto schedule = schedule_for(cfg);
  r.losses = train_classifier(r.net, data, train, schedule, o, log);
  if (!held.empty()) {
    r.holdout = evaluate_classifier(r.net, data, held, schedule, kind, cfg.mask_prob, 0, cfg.seed + 303);
    if (log != nullptr) {
      log->info(cat("classifier[", to_string(kind), "] held-out accuracy ", r.holdout.accuracy, " (real ",
                    r.holdout.mean_real, ", generated ", r.holdout.mean_generated, ", n=", r.holdout.n_pairs, ")"));
    }
  }
  return r;
}

Archive classifier_archive(SyncClassifier& net, ClassifierKind kind, const RunConfig& cfg) {
  Archive a;
  a.meta = {{"kind", std::string(to_string(kind))},
            {"config_digest", config_digest(cfg)},
            {"architecture_digest", classifier_architecture_digest(cfg)}};
  export_module(*net, "classifier", a);
  return a;
}

std::pair<SyncClassifier, ClassifierKind> classifier_from_archive(const Archive& a, const RunConfig& cfg) {
  const auto kind = classifier_kind_from_string(a.meta.value("kind", ""));
  if (a.meta.value("architecture_digest", "") != classifier_architecture_digest(cfg)) {
    throw ConfigError("classifier checkpoint architecture differs from the run config");
  }
  SyncClassifier net(classifier_options(cfg));
  import_module(*net, "classifier", a);
  net->eval();
  return {net, kind};
}

GenerationResult generate_clip(Backbone& backbone, GuidanceClassifiers& classifiers, const Prepared& prep,
                               const torch::Tensor& latents, std::int64_t clip, const GuidanceConfig& gcfg,
                               int n_steps, const NoiseSchedule& schedule, std::uint64_t seed, bool decode) {
  if (clip < 0 || clip >= latents.size(0)) throw std::invalid_argument("generate: clip index out of range");
  GenerationResult r;
  DdimSolver solver(backbone.denoiser, schedule, n_steps);
  const auto z0 = latents[clip];
  const auto Fr = z0.size(0);
  const auto start = make_unified_input(std::nullopt, 1, static_cast<int>(Fr), static_cast<int>(z0.size(1)),
                                        static_cast<int>(z0.size(2)), static_cast<int>(z0.size(3)), seed);
  SamplingCondition cond{z0[0].unsqueeze(0), prep.audio[clip].unsqueeze(0), {}};
  const auto masks = make_region_masks(prep.face[clip]);
  const auto t0 = std::chrono::steady_clock::now();
  r.latents = sample_video(solver, classifiers, start, cond, masks, gcfg, &r.stats);
  const auto t1 = std::chrono::steady_clock::now();
  r.sampling_seconds = std::chrono::duration<double>(t1 - t0).count();
  if (decode) {
    r.frames = decode_latents(backbone.codec, r.latents);
    r.decoding_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
  }
  return r;
}

}  // namespace partsync::pipeline
