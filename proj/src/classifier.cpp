// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/classifier.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "partsync/error.hpp"

namespace partsync {

namespace nn = torch::nn;

std::string_view to_string(ClassifierKind kind) {
  return kind == ClassifierKind::face ? "face" : "non-face";
}

ClassifierKind classifier_kind_from_string(std::string_view name) {
  if (name == "face") return ClassifierKind::face;
  if (name == "non-face" || name == "nonface") return ClassifierKind::nonface;
  throw std::invalid_argument("unknown classifier kind '" + std::string(name) + "'");
}

torch::Tensor rope3d_angles(int frames, int height, int width, int channels, torch::ScalarType dtype) {
  if (channels % 2 != 0) throw std::invalid_argument("rotary encoding needs an even channel count");
  const int pairs = channels / 2;
  const int base = pairs / 3;
  const int rem = pairs % 3;
  const int per_axis[3] = {base + (rem > 0 ? 1 : 0), base + (rem > 1 ? 1 : 0), base};
  const int extent[3] = {frames, height, width};

  const auto opts = torch::TensorOptions().dtype(dtype);
  std::vector<torch::Tensor> parts;
  for (int axis = 0; axis < 3; ++axis) {
    const int p = per_axis[axis];
    if (p == 0) continue;
    const auto freqs = torch::pow(10000.0, -torch::arange(p, opts) / static_cast<double>(p));
    const auto pos = torch::arange(extent[axis], opts);
    auto a = pos.unsqueeze(1) * freqs.unsqueeze(0);  // [extent, p]
    std::vector<std::int64_t> shape = {1, 1, 1, p};
    shape[axis] = extent[axis];
    parts.push_back(a.view(shape).expand({frames, height, width, p}));
  }
  return torch::cat(parts, 3).contiguous();
}

torch::Tensor apply_rope3d(const torch::Tensor& features) {
  const auto B = features.size(0), Fr = features.size(1), C = features.size(2);
  const auto H = features.size(3), W = features.size(4);
  const auto angles = rope3d_angles(static_cast<int>(Fr), static_cast<int>(H), static_cast<int>(W),
                                    static_cast<int>(C), features.scalar_type());
  const auto cos = torch::cos(angles).unsqueeze(0);  // [1, F, h, w, c/2]
  const auto sin = torch::sin(angles).unsqueeze(0);
  const auto x = features.permute({0, 1, 3, 4, 2}).reshape({B, Fr, H, W, C / 2, 2});
  const auto x0 = x.select(5, 0);
  const auto x1 = x.select(5, 1);
  const auto r = torch::stack({x0 * cos - x1 * sin, x0 * sin + x1 * cos}, 5);
  return r.reshape({B, Fr, H, W, C}).permute({0, 1, 4, 2, 3});
}

SyncClassifierImpl::SyncClassifierImpl(const ClassifierOptions& options)
    : options_(options), width_(2 * options.encoder.width) {
  const int c = width_;
  const int audio_in = (2 * options.window + 1) * options.encoder.audio_dim;
  encoder_ = register_module("encoder", UNetEncoder(options.encoder));
  audio_proj_ = register_module("audio_proj", nn::Linear(audio_in, c));
  modal_ = register_parameter("modal", torch::randn({2, c}) * 0.02);
  temporal_video_ = register_parameter("temporal_video", torch::randn({options.max_video_tokens, c}) * 0.02);
  temporal_audio_ = register_parameter("temporal_audio", torch::randn({options.max_audio_tokens, c}) * 0.02);
  cls_ = register_parameter("cls", torch::randn({c}) * 0.02);
  auto layer = nn::TransformerEncoderLayer(
      nn::TransformerEncoderLayerOptions(c, options.heads).dim_feedforward(2 * c).dropout(0.0).activation(torch::kGELU));
  transformer_ = register_module("transformer", nn::TransformerEncoder(nn::TransformerEncoderOptions(layer, options.layers)));
  head_fc1_ = register_module("head_fc1", nn::Linear(c, c));
  head_fc2_ = register_module("head_fc2", nn::Linear(c, 1));
}

torch::Tensor SyncClassifierImpl::encode_video_tokens(const torch::Tensor& video, const torch::Tensor& t,
                                                      const torch::Tensor& audio_windows) {
  if (video.dim() != 5) throw std::invalid_argument("video must be [B, t_v, C, h, w]");
  const auto B = video.size(0), tv = video.size(1);
  if (tv < 1 || tv > options_.max_video_tokens) throw std::invalid_argument("video length exceeds classifier capacity");
  if (audio_windows.size(1) != tv) throw std::invalid_argument("encoder audio windows must align with video frames");
  auto flag = torch::zeros({B, tv, 1, video.size(3), video.size(4)}, video.options());
  auto feats = encoder_(torch::cat({video, flag}, 2), t, audio_windows).features;  // [B, tv, c, h', w']
  feats = apply_rope3d(feats);
  auto pooled = std::get<0>(feats.flatten(3).max(3));  // [B, tv, c]
  return pooled + modal_[kVisualModality] + temporal_video_.narrow(0, 0, tv);
}

torch::Tensor SyncClassifierImpl::encode_audio_tokens(const torch::Tensor& audio_windows) {
  if (audio_windows.dim() != 4) throw std::invalid_argument("audio must be [B, t_a, 2m+1, d_a]");
  const auto ta = audio_windows.size(1);
  if (ta < 1 || ta > options_.max_audio_tokens) throw std::invalid_argument("audio length exceeds classifier capacity");
  return audio_proj_(audio_windows.flatten(2)) + modal_[kAudioModality] + temporal_audio_.narrow(0, 0, ta);
}

torch::Tensor SyncClassifierImpl::assemble_sequence(const torch::Tensor& video_tokens,
                                                    const torch::Tensor& audio_tokens) {
  if (video_tokens.size(2) != audio_tokens.size(2) || video_tokens.size(2) != width_) {
    throw std::invalid_argument("token widths differ");
  }
  const auto B = video_tokens.size(0);
  auto cls = cls_.view({1, 1, width_}).expand({B, 1, width_}).to(video_tokens.scalar_type());
  return torch::cat({cls, video_tokens, audio_tokens}, 1);
}

torch::Tensor SyncClassifierImpl::transform(const torch::Tensor& sequence) {
  return transformer_(sequence.transpose(0, 1)).transpose(0, 1);
}

torch::Tensor SyncClassifierImpl::head(const torch::Tensor& outputs) {
  const auto cls_out = outputs.select(1, 0);
  return head_fc2_(torch::gelu(head_fc1_(cls_out))).squeeze(1);
}

torch::Tensor SyncClassifierImpl::logits(const ClassifierInput& input) {
  const auto v = encode_video_tokens(input.video, input.t, input.audio);
  const auto a = encode_audio_tokens(input.audio);
  return head(transform(assemble_sequence(v, a)));
}

void SyncClassifierImpl::init_encoder_from(Denoiser& denoiser) {
  torch::NoGradGuard no_grad;
  auto src = denoiser->encoder()->named_parameters(true);
  for (auto& p : encoder_->named_parameters(true)) {
    const auto* s = src.find(p.key());
    if (s == nullptr || s->sizes() != p.value().sizes()) {
      throw std::invalid_argument("denoiser encoder does not match classifier encoder at '" + p.key() + "'");
    }
    p.value().copy_(*s);
  }
}

void SyncClassifierImpl::set_encoder_frozen(bool frozen) {
  for (auto& p : encoder_->parameters(true)) p.set_requires_grad(!frozen);
}

torch::Tensor bce_loss(const torch::Tensor& s, const torch::Tensor& y) {
  constexpr double eps = 1e-7;
  const auto sc = s.clamp(eps, 1.0 - eps);
  const auto yy = y.to(s.scalar_type());
  return -(yy * torch::log(sc) + (1 - yy) * torch::log(1 - sc)).mean();
}

torch::Tensor sync_gradient(SyncClassifier& net, const torch::Tensor& video, const torch::Tensor& audio,
                            const torch::Tensor& t, const torch::Tensor& region_mask) {
  torch::AutoGradMode enable(true);
  auto z = video.detach().clone().requires_grad_(true);
  const auto logit = net->logits(ClassifierInput{z, t, audio});
  const auto log_s = torch::log_sigmoid(logit).sum();
  auto grad = torch::autograd::grad({log_s}, {z})[0];
  grad = grad * region_mask.to(grad.scalar_type());
  if (!torch::isfinite(grad).all().item<bool>()) {
    throw NumericError("classifier gradient is not finite (logit range [" +
                       std::to_string(logit.min().item<double>()) + ", " +
                       std::to_string(logit.max().item<double>()) + "])");
  }
  return grad.detach();
}

}  // namespace partsync
