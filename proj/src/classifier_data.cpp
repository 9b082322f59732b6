// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/classifier_data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "partsync/error.hpp"

namespace partsync {

namespace F = torch::nn::functional;

torch::Tensor face_mask_latent(const FaceTrack& boxes, int frames, int height, int width, int factor,
                               int dilation, Logger* log) {
  if (factor < 1 || height % factor != 0 || width % factor != 0) {
    throw std::invalid_argument("face mask: frame size must be divisible by the latent factor");
  }
  if (dilation < 0) throw std::invalid_argument("face mask: dilation must be >= 0");
  const int h = height / factor, w = width / factor;
  auto mask = torch::zeros({frames, h, w});
  auto acc = mask.accessor<float, 3>();
  int missing = 0;
  for (int f = 0; f < frames; ++f) {
    if (f >= static_cast<int>(boxes.size()) || !boxes[f]) {
      ++missing;
      continue;
    }
    const auto& b = *boxes[f];
    for (int cy = 0; cy < h; ++cy) {
      for (int cx = 0; cx < w; ++cx) {
        const bool overlap = b.x0 < (cx + 1) * factor && b.x1 >= cx * factor && b.y0 < (cy + 1) * factor &&
                             b.y1 >= cy * factor;
        if (overlap) acc[f][cy][cx] = 1.0f;
      }
    }
  }
  if (missing > 0 && log != nullptr) {
    log->warn(cat("face mask: ", missing, " of ", frames, " frames have no face box; treated as empty"));
  }
  if (dilation > 0) {
    mask = F::max_pool2d(mask.unsqueeze(1), F::MaxPool2dFuncOptions(2 * dilation + 1).stride(1).padding(dilation))
               .squeeze(1);
  }
  return mask;
}

torch::Tensor region_keep_map(ClassifierKind kind, const torch::Tensor& face) {
  return kind == ClassifierKind::face ? face : 1 - face;
}

MaskedBatch apply_region_masking(const torch::Tensor& video, const torch::Tensor& face, ClassifierKind kind,
                                 double p, std::mt19937_64& rng) {
  if (video.dim() != 5 || face.dim() != 4 || face.size(0) != video.size(0) || face.size(1) != video.size(1) ||
      face.size(2) != video.size(3) || face.size(3) != video.size(4)) {
    throw std::invalid_argument("region masking: face map must be [B, F, h, w] matching the video");
  }
  const auto B = video.size(0);
  std::bernoulli_distribution coin(p);
  auto applied = torch::zeros({B}, torch::kBool);
  auto keep = torch::ones_like(face);
  for (std::int64_t b = 0; b < B; ++b) {
    if (coin(rng)) {
      applied[b] = true;
      keep[b] = region_keep_map(kind, face[b]);
    }
  }
  return {video * keep.unsqueeze(2).to(video.scalar_type()), applied};
}

std::vector<int> scaled_lengths(double factor) {
  if (!(factor > 0)) throw std::invalid_argument("length factor must be positive");
  std::vector<int> out;
  for (int base : {30, 60, 90, 120}) out.push_back(std::max(1, static_cast<int>(std::lround(base * factor))));
  return out;
}

std::vector<CropSample> augment_lengths(const std::vector<int>& clip_frames, const std::vector<int>& lengths,
                                        int n_samples, std::mt19937_64& rng, Logger* log) {
  if (clip_frames.empty() || lengths.empty()) throw std::invalid_argument("augment_lengths: empty input");
  std::uniform_int_distribution<std::size_t> pick_clip(0, clip_frames.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_len(0, lengths.size() - 1);
  std::vector<CropSample> out;
  out.reserve(n_samples);
  int skipped = 0;
  for (int i = 0; i < n_samples; ++i) {
    const int clip = static_cast<int>(pick_clip(rng));
    const int len = lengths[pick_len(rng)];
    const int frames = clip_frames[clip];
    if (frames < len) {
      ++skipped;
      continue;
    }
    CropSample s;
    s.clip = clip;
    s.length = len;
    s.start = std::uniform_int_distribution<int>(0, frames - len)(rng);
    s.reference = std::uniform_int_distribution<int>(0, frames - 1)(rng);
    out.push_back(s);
  }
  if (skipped > 0 && log != nullptr) log->warn(cat("augment_lengths: skipped ", skipped, " draws on short clips"));
  return out;
}

NegativeSet make_negative_samples(DdimSolver& solver, const torch::Tensor& latents, const torch::Tensor& audio,
                                  std::uint64_t seed, int batch) {
  if (latents.dim() != 5 || audio.dim() != 4 || audio.size(0) != latents.size(0)) {
    throw std::invalid_argument("negatives: latents [N, F, C, h, w] and audio [N, F, K, d_a] required");
  }
  const auto N = latents.size(0), Fr = latents.size(1);
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto ref_idx = torch::randint(Fr, {N}, gen, torch::kLong);
  std::vector<torch::Tensor> parts;
  for (std::int64_t s = 0; s < N; s += batch) {
    const auto n = std::min<std::int64_t>(batch, N - s);
    const auto z0 = latents.narrow(0, s, n);
    const auto r = ref_idx.narrow(0, s, n);
    const auto reference = z0.index({torch::arange(n), r});
    const auto start = make_unified_input(std::nullopt, static_cast<int>(n), static_cast<int>(Fr),
                                          static_cast<int>(z0.size(2)), static_cast<int>(z0.size(3)),
                                          static_cast<int>(z0.size(4)), seed + 1 + static_cast<std::uint64_t>(s));
    SamplingCondition cond{reference, audio.narrow(0, s, n), {}};
    parts.push_back(sample_plain(solver, start, cond));
  }
  return {torch::cat(parts, 0), ref_idx, torch::zeros({N})};
}

namespace {

struct Batch {
  torch::Tensor video, audio, face, labels;
};

Batch crop_batch(const ClassifierData& data, const std::vector<std::int64_t>& real_clips,
                 const std::vector<std::int64_t>& gen_clips, const std::vector<int>& starts, int len) {
  std::vector<torch::Tensor> v, a, f;
  const auto add = [&](const torch::Tensor& src, std::int64_t clip, int start) {
    v.push_back(src[clip].narrow(0, start, len));
    a.push_back(data.audio[clip].narrow(0, start, len));
    f.push_back(data.face[clip].narrow(0, start, len));
  };
  std::size_t k = 0;
  for (auto c : real_clips) add(data.real, c, starts[k++]);
  for (auto c : gen_clips) add(data.generated, c, starts[k++]);
  auto labels = torch::cat({torch::ones({static_cast<std::int64_t>(real_clips.size())}),
                            torch::zeros({static_cast<std::int64_t>(gen_clips.size())})});
  return {torch::stack(v), torch::stack(a), torch::stack(f), labels};
}

}  // namespace

std::vector<double> train_classifier(SyncClassifier& net, const ClassifierData& data,
                                     const std::vector<std::int64_t>& train_idx, const NoiseSchedule& schedule,
                                     const ClassifierTrainOptions& options, Logger* log) {
  if (train_idx.empty()) throw std::invalid_argument("train_classifier: no training clips");
  const int Fr = static_cast<int>(data.real.size(1));
  std::vector<int> lengths;
  for (int l : options.lengths) {
    if (l <= Fr) {
      lengths.push_back(l);
    } else if (log != nullptr) {
      log->warn(cat("train_classifier: length ", l, " exceeds clip length ", Fr, "; skipped"));
    }
  }
  if (lengths.empty()) throw std::invalid_argument("train_classifier: no usable crop length");

  std::mt19937_64 rng(options.seed);
  torch::manual_seed(options.seed);
  net->set_encoder_frozen(options.freeze_encoder);
  net->train();
  std::vector<torch::Tensor> params;
  for (auto& p : net->parameters()) {
    if (p.requires_grad()) params.push_back(p);
  }
  torch::optim::Adam opt(params, torch::optim::AdamOptions(options.lr));

  const int half = std::max(1, options.batch / 2);
  std::uniform_int_distribution<std::size_t> pick(0, train_idx.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_len(0, lengths.size() - 1);
  std::vector<double> losses;
  losses.reserve(options.steps);
  for (int step = 0; step < options.steps; ++step) {
    const double lr = options.warmup > 0 ? options.lr * std::min(1.0, (step + 1.0) / options.warmup) : options.lr;
    for (auto& g : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(g.options()).lr(lr);

    const int len = lengths[pick_len(rng)];
    std::vector<std::int64_t> real_clips, gen_clips;
    std::vector<int> starts;
    std::uniform_int_distribution<int> pick_start(0, Fr - len);
    for (int i = 0; i < half; ++i) real_clips.push_back(train_idx[pick(rng)]);
    for (int i = 0; i < half; ++i) gen_clips.push_back(train_idx[pick(rng)]);
    for (int i = 0; i < 2 * half; ++i) starts.push_back(pick_start(rng));
    auto b = crop_batch(data, real_clips, gen_clips, starts, len);

    const auto B = b.video.size(0);
    const auto t = torch::randint(0, schedule.steps(), {B}, torch::kLong);
    const auto z_t = add_noise(b.video, torch::randn_like(b.video), t, schedule);
    const auto masked = apply_region_masking(z_t, b.face, options.kind, options.mask_prob, rng);
    const auto s = torch::sigmoid(net->logits(ClassifierInput{masked.video, t, b.audio}));
    const auto loss = bce_loss(s, b.labels);
    opt.zero_grad();
    loss.backward();
    opt.step();
    losses.push_back(loss.item<double>());
    if (log != nullptr && (step % 100 == 0 || step + 1 == options.steps)) {
      log->info(cat("classifier[", to_string(options.kind), "] step ", step, " loss ", losses.back()));
    }
  }
  net->eval();
  return losses;
}

ClassifierEval evaluate_classifier(SyncClassifier& net, const ClassifierData& data,
                                   const std::vector<std::int64_t>& idx, const NoiseSchedule& schedule,
                                   ClassifierKind kind, double mask_prob, int t, std::uint64_t seed) {
  if (idx.empty()) throw std::invalid_argument("evaluate_classifier: no clips");
  if (t < 0 || t >= schedule.steps()) throw std::invalid_argument("evaluate_classifier: t out of range");
  torch::NoGradGuard no_grad;
  net->eval();
  std::mt19937_64 rng(seed);
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto ids = torch::tensor(idx, torch::kLong);
  const auto n = ids.size(0);
  ClassifierEval out;
  std::int64_t correct = 0;
  double sum_real = 0, sum_gen = 0;
  constexpr std::int64_t chunk = 64;
  for (int label = 1; label >= 0; --label) {
    const auto& src = label == 1 ? data.real : data.generated;
    for (std::int64_t s = 0; s < n; s += chunk) {
      const auto sel = ids.narrow(0, s, std::min(chunk, n - s));
      const auto video = src.index_select(0, sel);
      const auto tt = torch::full({sel.size(0)}, t, torch::kLong);
      const auto z_t = add_noise(video, torch::randn(video.sizes(), gen), tt, schedule);
      const auto masked = apply_region_masking(z_t, data.face.index_select(0, sel), kind, mask_prob, rng);
      const auto score = net->score(ClassifierInput{masked.video, tt, data.audio.index_select(0, sel)});
      const auto pred = score > 0.5;
      correct += (label == 1 ? pred : pred.logical_not()).sum().item<std::int64_t>();
      (label == 1 ? sum_real : sum_gen) += score.sum().item<double>();
    }
  }
  out.n_pairs = n;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(2 * n);
  out.mean_real = sum_real / static_cast<double>(n);
  out.mean_generated = sum_gen / static_cast<double>(n);
  return out;
}

}  // namespace partsync
