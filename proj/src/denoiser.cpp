// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace partsync {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

torch::Tensor merge_reference(const torch::Tensor& reference, const torch::Tensor& video) {
  const bool batched = reference.dim() == 4 && video.dim() == 5;
  const bool single = reference.dim() == 3 && video.dim() == 4;
  if (!batched && !single) throw std::invalid_argument("merge_reference: unexpected ranks");
  const int time_dim = batched ? 1 : 0;
  if (video.size(time_dim) < 1) throw std::invalid_argument("merge_reference: video needs at least one frame");
  if (reference.sizes() != video.select(time_dim, 0).sizes()) {
    throw std::invalid_argument("merge_reference: reference and frame shapes differ");
  }
  return torch::cat({reference.unsqueeze(time_dim), video}, time_dim);
}

std::pair<torch::Tensor, torch::Tensor> split_reference(const torch::Tensor& merged) {
  if (merged.dim() != 4 && merged.dim() != 5) throw std::invalid_argument("split_reference: unexpected rank");
  const int time_dim = merged.dim() == 5 ? 1 : 0;
  if (merged.size(time_dim) < 2) throw std::invalid_argument("split_reference: need reference plus frames");
  return {merged.select(time_dim, 0), merged.narrow(time_dim, 1, merged.size(time_dim) - 1)};
}

namespace {

int groups_for(int channels) { return channels % 8 == 0 ? 8 : 1; }

nn::Conv2d conv3(int in, int out, int stride = 1) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

nn::MultiheadAttention mha(int channels, int heads) {
  return nn::MultiheadAttention(nn::MultiheadAttentionOptions(channels, heads).dropout(0.0));
}

}  // namespace

TimestepEmbeddingImpl::TimestepEmbeddingImpl(int dim) : dim_(dim) {
  fc1_ = register_module("fc1", nn::Linear(dim, dim));
  fc2_ = register_module("fc2", nn::Linear(dim, dim));
}

torch::Tensor TimestepEmbeddingImpl::forward(const torch::Tensor& t) {
  const auto dtype = fc1_->weight.scalar_type();
  const int half = dim_ / 2;
  const auto freqs =
      torch::exp(-std::log(10000.0) * torch::arange(half, torch::TensorOptions().dtype(dtype)) / half);
  const auto args = t.to(dtype).unsqueeze(1) * freqs.unsqueeze(0);
  auto emb = torch::cat({torch::sin(args), torch::cos(args)}, 1);
  if (emb.size(1) < dim_) emb = F::pad(emb, F::PadFuncOptions({0, dim_ - emb.size(1)}));
  return fc2_(torch::silu(fc1_(emb)));
}

ResBlockImpl::ResBlockImpl(int in, int out, int temb_dim) {
  norm1_ = register_module("norm1", nn::GroupNorm(groups_for(in), in));
  conv1_ = register_module("conv1", conv3(in, out));
  temb_proj_ = register_module("temb_proj", nn::Linear(temb_dim, out));
  norm2_ = register_module("norm2", nn::GroupNorm(groups_for(out), out));
  conv2_ = register_module("conv2", conv3(out, out));
  if (in != out) skip_ = register_module("skip", nn::Conv2d(nn::Conv2dOptions(in, out, 1)));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& temb) {
  auto h = conv1_(torch::silu(norm1_(x)));
  h = h + temb_proj_(torch::silu(temb)).unsqueeze(-1).unsqueeze(-1);
  h = conv2_(torch::silu(norm2_(h)));
  return (skip_ ? skip_(x) : x) + h;
}

TemporalAttentionImpl::TemporalAttentionImpl(int channels, int heads) {
  norm_ = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({channels})));
  attn_ = register_module("attn", mha(channels, heads));
}

torch::Tensor TemporalAttentionImpl::forward(const torch::Tensor& x) {
  const auto B = x.size(0), S = x.size(1), C = x.size(2), H = x.size(3), W = x.size(4);
  auto seq = x.permute({1, 0, 3, 4, 2}).reshape({S, B * H * W, C});
  const auto q = norm_(seq);
  auto out = std::get<0>(attn_(q, q, q));
  out = out.reshape({S, B, H, W, C}).permute({1, 0, 4, 2, 3});
  return x + out;
}

AudioCrossAttentionImpl::AudioCrossAttentionImpl(int channels, int audio_dim, int heads) {
  norm_ = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({channels})));
  kv_ = register_module("kv", nn::Linear(audio_dim, channels));
  attn_ = register_module("attn", mha(channels, heads));
}

torch::Tensor AudioCrossAttentionImpl::forward(const torch::Tensor& x, const torch::Tensor& audio) {
  const auto N = x.size(0), C = x.size(1), H = x.size(2), W = x.size(3);
  const auto q = norm_(x.flatten(2).permute({2, 0, 1}));  // [hw, N, C]
  const auto kv = kv_(audio).permute({1, 0, 2});          // [K, N, C]
  auto out = std::get<0>(attn_(q, kv, kv));
  return x + out.permute({1, 2, 0}).reshape({N, C, H, W});
}

VideoBlockImpl::VideoBlockImpl(int in, int out, int temb_dim, int audio_dim, int heads) {
  res_ = register_module("res", ResBlock(in, out, temb_dim));
  temporal_ = register_module("temporal", TemporalAttention(out, heads));
  cross_ = register_module("cross", AudioCrossAttention(out, audio_dim, heads));
}

torch::Tensor VideoBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& temb,
                                      const torch::Tensor& audio) {
  const auto B = x.size(0), S = x.size(1);
  auto h = res_(x.flatten(0, 1), temb.repeat_interleave(S, 0));
  h = temporal_(h.unflatten(0, {B, S}));
  h = cross_(h.flatten(0, 1), audio.flatten(0, 1));
  return h.unflatten(0, {B, S});
}

UNetEncoderImpl::UNetEncoderImpl(const DenoiserOptions& options) : options_(options) {
  const int W = options.width;
  time_embed_ = register_module("time_embed", TimestepEmbedding(W));
  in_conv_ = register_module("in_conv", conv3(options.latent_channels + 1, W));
  block1_ = register_module("block1", VideoBlock(W, W, W, options.audio_dim, options.heads));
  down_ = register_module("down", conv3(W, 2 * W, 2));
  block2_ = register_module("block2", VideoBlock(2 * W, 2 * W, W, options.audio_dim, options.heads));
}

EncoderFeatures UNetEncoderImpl::forward(const torch::Tensor& x, const torch::Tensor& t,
                                         const torch::Tensor& audio) {
  const auto B = x.size(0), S = x.size(1);
  if (x.size(3) % 2 != 0 || x.size(4) % 2 != 0) {
    throw std::invalid_argument("latent height and width must be even");
  }
  const auto temb = time_embed_(t);
  auto h = in_conv_(x.flatten(0, 1)).unflatten(0, {B, S});
  auto skip = block1_(h, temb, audio);
  auto d = down_(skip.flatten(0, 1)).unflatten(0, {B, S});
  auto features = block2_(d, temb, audio);
  return {features, skip, temb};
}

DenoiserImpl::DenoiserImpl(const DenoiserOptions& options) : options_(options) {
  const int W = options.width;
  encoder_ = register_module("encoder", UNetEncoder(options));
  up_conv_ = register_module("up_conv", conv3(2 * W, W));
  dec_block_ = register_module("dec_block", VideoBlock(2 * W, W, W, options.audio_dim, options.heads));
  out_norm_ = register_module("out_norm", nn::GroupNorm(groups_for(W), W));
  out_conv_ = register_module("out_conv", conv3(W, options.latent_channels));
  torch::NoGradGuard no_grad;
  out_conv_->weight.zero_();
  out_conv_->bias.zero_();
}

std::pair<torch::Tensor, torch::Tensor> build_unified_slots(const DenoiseInput& input) {
  const auto& z = input.z_t;
  if (z.dim() != 5) throw std::invalid_argument("z_t must be [B, F, C, h, w]");
  const auto B = z.size(0), Fr = z.size(1), H = z.size(3), W = z.size(4);
  if (input.audio.dim() != 4 || input.audio.size(0) != B || input.audio.size(1) != Fr) {
    throw std::invalid_argument("audio windows must cover every frame: [B, F, 2m+1, d_a]");
  }
  auto merged = merge_reference(input.reference, z);  // [B, F+1, C, h, w]
  auto flag = torch::zeros({B, Fr + 1, 1, H, W}, z.options());
  flag.select(1, 0).fill_(1.0);
  if (input.first_frame.defined()) {
    flag.select(1, 1).copy_(input.first_frame.to(z.scalar_type()).view({B, 1, 1, 1}).expand({B, 1, H, W}));
  }
  auto x = torch::cat({merged, flag}, 2);
  auto audio = torch::cat({torch::zeros_like(input.audio.select(1, 0)).unsqueeze(1), input.audio}, 1);
  return {x, audio};
}

torch::Tensor DenoiserImpl::forward(const DenoiseInput& input) {
  auto [x, audio] = build_unified_slots(input);
  const auto B = x.size(0), S = x.size(1);
  auto enc = encoder_(x, input.t, audio);
  auto up = F::interpolate(enc.features.flatten(0, 1),
                           F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
  up = up_conv_(up);
  auto h = torch::cat({up, enc.skip.flatten(0, 1)}, 1).unflatten(0, {B, S});
  h = dec_block_(h, enc.temb, audio);
  auto out = out_conv_(torch::silu(out_norm_(h.flatten(0, 1)))).unflatten(0, {B, S});
  return out.narrow(1, 1, S - 1);
}

}  // namespace partsync
