// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "partsync/error.hpp"
#include "partsync/tensor_io.hpp"

namespace partsync {

torch::Tensor AudioFeatureTrack::tokens() const {
  return windowed.view({frames(), 2 * window + 1, feature_dim()});
}

AudioFeatureTrack window_audio(const torch::Tensor& per_frame, int m) {
  if (m < 0) throw std::invalid_argument("window half-width must be non-negative");
  if (per_frame.dim() != 2 || per_frame.size(0) < 1) {
    throw std::invalid_argument("per-frame audio features must be [F, d_a] with F >= 1");
  }
  const auto F = per_frame.size(0);
  auto offsets = torch::arange(-m, m + 1, torch::kLong);
  auto idx = torch::arange(F, torch::kLong).unsqueeze(1) + offsets.unsqueeze(0);  // [F, 2m+1]
  idx = idx.clamp(0, F - 1);
  auto windowed = per_frame.index_select(0, idx.flatten()).view({F, (2 * m + 1) * per_frame.size(1)});
  return AudioFeatureTrack{per_frame, m, windowed.contiguous()};
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t frame_begin(int f, int sample_rate, double fps) {
  return static_cast<std::size_t>(std::llround(f * sample_rate / fps));
}

}  // namespace

std::vector<double> frame_energies(std::span<const float> samples, int sample_rate, double fps,
                                   int n_frames) {
  std::vector<double> out(n_frames, 0.0);
  for (int f = 0; f < n_frames; ++f) {
    const auto b = std::min(samples.size(), frame_begin(f, sample_rate, fps));
    const auto e = std::min(samples.size(), frame_begin(f + 1, sample_rate, fps));
    double acc = 0;
    for (auto i = b; i < e; ++i) acc += static_cast<double>(samples[i]) * samples[i];
    out[f] = e > b ? acc / static_cast<double>(e - b) : 0.0;
  }
  return out;
}

torch::Tensor LogBandEnergyExtractor::extract(std::span<const float> samples, int sample_rate,
                                              double fps, int n_frames) const {
  const auto len = static_cast<std::int64_t>(frame_begin(1, sample_rate, fps));
  if (len < 2) throw std::invalid_argument("audio frame slice too short for band energies");
  const auto n_bins = len / 2 + 1;

  // Band edges evenly spaced on the mel axis up to Nyquist.
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<std::int64_t> edges(bands_ + 1);
  for (int b = 0; b <= bands_; ++b) {
    const double hz = mel_to_hz(mel_max * b / bands_);
    edges[b] = std::clamp<std::int64_t>(std::llround(hz / (sample_rate / 2.0) * (n_bins - 1)), 0, n_bins - 1);
  }

  auto frames = torch::zeros({n_frames, len}, torch::kFloat32);
  auto acc = frames.accessor<float, 2>();
  for (int f = 0; f < n_frames; ++f) {
    const auto b = frame_begin(f, sample_rate, fps);
    for (std::int64_t i = 0; i < len; ++i) {
      const auto s = b + static_cast<std::size_t>(i);
      acc[f][i] = s < samples.size() ? samples[s] : 0.0f;
    }
  }
  const auto power = torch::fft::rfft(frames, c10::nullopt, 1).abs().pow(2) / static_cast<double>(len);
  auto out = torch::empty({n_frames, bands_}, torch::kFloat32);
  for (int b = 0; b < bands_; ++b) {
    const auto lo = edges[b];
    const auto hi = std::max(edges[b + 1], lo + 1);
    out.select(1, b).copy_(power.slice(1, lo, hi).mean(1));
  }
  return torch::log(out + 1e-6f);
}

std::vector<float> WavData::as_float() const {
  std::vector<float> out(pcm.size());
  for (std::size_t i = 0; i < pcm.size(); ++i) out[i] = static_cast<float>(pcm[i]) / 32768.0f;
  return out;
}

namespace {

void put_u32(std::vector<std::uint8_t>& o, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) o.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& o, std::uint16_t v) {
  o.push_back(static_cast<std::uint8_t>(v));
  o.push_back(static_cast<std::uint8_t>(v >> 8));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void write_wav(const std::filesystem::path& path, const WavData& wav) {
  const auto data_bytes = static_cast<std::uint32_t>(wav.pcm.size() * 2);
  std::vector<std::uint8_t> o;
  o.reserve(44 + data_bytes);
  for (char c : std::string("RIFF")) o.push_back(static_cast<std::uint8_t>(c));
  put_u32(o, 36 + data_bytes);
  for (char c : std::string("WAVEfmt ")) o.push_back(static_cast<std::uint8_t>(c));
  put_u32(o, 16);
  put_u16(o, 1);  // PCM
  put_u16(o, 1);  // mono
  put_u32(o, static_cast<std::uint32_t>(wav.sample_rate));
  put_u32(o, static_cast<std::uint32_t>(wav.sample_rate * 2));
  put_u16(o, 2);
  put_u16(o, 16);
  for (char c : std::string("data")) o.push_back(static_cast<std::uint8_t>(c));
  put_u32(o, data_bytes);
  for (auto s : wav.pcm) put_u16(o, static_cast<std::uint16_t>(s));
  write_file_bytes(path, o);
}

WavData read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(path.string() + ": not a RIFF/WAVE file");
  }
  int channels = 0, bits = 0, rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto* chunk = bytes.data() + pos;
    const auto len = get_u32(chunk + 4);
    if (pos + 8 + len > bytes.size()) throw FormatError(path.string() + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0 && len >= 16) {
      if (get_u16(chunk + 8) != 1) throw FormatError(path.string() + ": only PCM is supported");
      channels = get_u16(chunk + 10);
      rate = static_cast<int>(get_u32(chunk + 12));
      bits = get_u16(chunk + 22);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = len;
    }
    pos += 8 + len + (len & 1u);
  }
  if (channels < 1 || bits != 16 || data == nullptr) {
    throw FormatError(path.string() + ": expected 16-bit PCM with a data chunk");
  }
  WavData wav;
  wav.sample_rate = rate;
  const std::size_t frames = data_len / (2u * channels);
  wav.pcm.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    int acc = 0;
    for (int c = 0; c < channels; ++c) {
      acc += static_cast<std::int16_t>(get_u16(data + 2 * (i * channels + c)));
    }
    wav.pcm[i] = static_cast<std::int16_t>(acc / channels);
  }
  return wav;
}

}  // namespace partsync
