// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "partsync/error.hpp"
#include "partsync/tensor_io.hpp"

namespace partsync::metrics {

GaussianFit fit_gaussian(const FeatureMatrix& x, double shrinkage) {
  if (x.rows() < 2) throw std::invalid_argument("fit_gaussian: need at least two samples");
  GaussianFit g;
  g.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - g.mean.transpose();
  g.cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  if (shrinkage > 0) {
    const double d = static_cast<double>(x.cols());
    g.cov = (1 - shrinkage) * g.cov +
            shrinkage * (g.cov.trace() / d) * Eigen::MatrixXd::Identity(x.cols(), x.cols());
  }
  return g;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, Logger* log) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-6 && log != nullptr) {
    log->warn(cat("fgd: clipping negative eigenvalue ", ev.minCoeff()));
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const GaussianFit& a, const GaussianFit& b, Logger* log) {
  if (a.mean.size() != b.mean.size()) throw std::invalid_argument("fgd: feature dimensions differ");
  const Eigen::MatrixXd s1 = psd_sqrt(a.cov, log);
  const Eigen::MatrixXd inner = s1 * b.cov * s1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-6 && log != nullptr) {
    log->warn(cat("fgd: clipping negative eigenvalue ", ev.minCoeff()));
  }
  const double tr_sqrt = ev.cwiseMax(0.0).cwiseSqrt().sum();
  const double d = std::max(0.0, (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2 * tr_sqrt);
  return d;
}

double fgd(const FeatureMatrix& real, const FeatureMatrix& generated, const FgdOptions& options, Logger* log) {
  if (real.cols() != generated.cols()) throw std::invalid_argument("fgd: feature dimensions differ");
  const auto dim = real.cols();
  const auto shrink_for = [&](const FeatureMatrix& x) {
    if (x.rows() > dim) return 0.0;
    if (options.fallback_shrinkage <= 0) {
      throw NumericError(cat("fgd: ", x.rows(), " samples cannot give a full-rank covariance in ", dim,
                             " dimensions and shrinkage is disabled"));
    }
    if (log != nullptr) log->warn(cat("fgd: ", x.rows(), " samples for ", dim, " dimensions; applying shrinkage"));
    return options.fallback_shrinkage;
  };
  return frechet_distance(fit_gaussian(real, shrink_for(real)), fit_gaussian(generated, shrink_for(generated)), log);
}

double diversity(const FeatureMatrix& features, int n_pairs, std::uint64_t seed) {
  const auto n = features.rows();
  if (n < 2) throw std::invalid_argument("diversity: need at least two samples");
  if (n_pairs < 1) throw std::invalid_argument("diversity: need at least one pair");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  double sum = 0;
  for (int k = 0; k < n_pairs; ++k) {
    const auto i = pick(rng);
    auto j = pick(rng);
    while (j == i) j = pick(rng);
    sum += (features.row(i) - features.row(j)).norm();
  }
  return sum / n_pairs;
}

double bas(const BeatTrack& beats, double sigma_b, Logger* log) {
  if (beats.motion_beats.empty()) throw std::invalid_argument("bas: no motion beats");
  if (!(sigma_b > 0)) throw std::invalid_argument("bas: sigma_b must be positive");
  if (beats.audio_beats.empty()) {
    if (log != nullptr) log->warn("bas: no audio beats; score is 0");
    return 0.0;
  }
  double sum = 0;
  for (double tm : beats.motion_beats) {
    double best = INFINITY;
    for (double ta : beats.audio_beats) best = std::min(best, (tm - ta) * (tm - ta));
    sum += std::exp(-best / (2 * sigma_b * sigma_b));
  }
  return sum / static_cast<double>(beats.motion_beats.size());
}

std::vector<double> onset_envelope(const std::vector<double>& energies) {
  std::vector<double> out(energies.size(), 0.0);
  for (std::size_t k = 1; k < energies.size(); ++k) {
    const double d = std::log(energies[k] + 1e-10) - std::log(energies[k - 1] + 1e-10);
    out[k] = std::max(0.0, d);
  }
  return out;
}

std::vector<double> audio_beats(const std::vector<double>& energies, double fps, double min_separation) {
  const auto env = onset_envelope(energies);
  const auto n = env.size();
  std::vector<std::size_t> peaks;
  for (std::size_t k = 1; k < n; ++k) {
    const bool left = env[k] > env[k - 1];
    const bool right = k + 1 >= n || env[k] >= env[k + 1];
    if (env[k] > 0 && left && right) peaks.push_back(k);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](auto a, auto b) { return env[a] > env[b]; });
  std::vector<double> kept;
  for (auto k : peaks) {
    const double t = static_cast<double>(k) / fps;
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](double o) { return std::abs(o - t) >= min_separation; });
    if (clear) kept.push_back(t);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<double> keypoint_speed(const par::PoseSequence& pose) {
  std::vector<double> speed;
  for (std::size_t k = 1; k < pose.frames.size(); ++k) {
    const auto& a = pose.frames[k - 1];
    const auto& b = pose.frames[k];
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("keypoint_speed: keypoint count changes");
    double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::hypot(b[j].x - a[j].x, b[j].y - a[j].y);
    speed.push_back(s / static_cast<double>(a.size()));
  }
  return speed;
}

std::vector<double> motion_beats(const par::PoseSequence& pose) {
  const auto v = keypoint_speed(pose);  // v[i] belongs to frame i + 1
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] < v[i - 1] && v[i] <= v[i + 1]) out.push_back(static_cast<double>(i + 1) / pose.fps);
  }
  return out;
}

TimeCost time_cost(const std::vector<RunTiming>& runs) {
  if (runs.empty()) throw std::invalid_argument("time_cost: no runs");
  TimeCost tc;
  for (const auto& r : runs) {
    tc.mean_sampling += r.sampling_seconds;
    tc.mean_decoding += r.decoding_seconds;
  }
  const double n = static_cast<double>(runs.size());
  tc.mean_sampling /= n;
  tc.mean_decoding /= n;
  tc.mean_total = tc.mean_sampling + tc.mean_decoding;
  tc.rounded = std::llround(tc.mean_total);
  return tc;
}

PoseAutoencoderImpl::PoseAutoencoderImpl(int input_dim, int feature_dim, int hidden)
    : input_dim_(input_dim), feature_dim_(feature_dim) {
  enc1_ = register_module("enc1", torch::nn::Linear(input_dim, hidden));
  enc2_ = register_module("enc2", torch::nn::Linear(hidden, feature_dim));
  dec1_ = register_module("dec1", torch::nn::Linear(feature_dim, hidden));
  dec2_ = register_module("dec2", torch::nn::Linear(hidden, input_dim));
}

torch::Tensor PoseAutoencoderImpl::encode(const torch::Tensor& x) { return enc2_(torch::gelu(enc1_(x))); }

torch::Tensor PoseAutoencoderImpl::forward(const torch::Tensor& x) { return dec2_(torch::gelu(dec1_(encode(x)))); }

torch::Tensor pose_vectors(const std::vector<par::PoseSequence>& poses) {
  if (poses.empty()) throw std::invalid_argument("pose_vectors: no poses");
  const auto frames = poses[0].frames.size();
  const auto joints = frames > 0 ? poses[0].frames[0].size() : 0;
  if (frames == 0 || joints == 0) throw std::invalid_argument("pose_vectors: empty pose sequence");
  auto out = torch::empty({static_cast<std::int64_t>(poses.size()), static_cast<std::int64_t>(frames * joints * 2)});
  auto acc = out.accessor<float, 2>();
  for (std::size_t n = 0; n < poses.size(); ++n) {
    const auto& p = poses[n];
    if (p.frames.size() != frames) throw std::invalid_argument("pose_vectors: frame counts differ");
    std::int64_t k = 0;
    for (const auto& fr : p.frames) {
      if (fr.size() != joints) throw std::invalid_argument("pose_vectors: keypoint counts differ");
      for (const auto& kp : fr) {
        acc[n][k++] = static_cast<float>(kp.x / p.width);
        acc[n][k++] = static_cast<float>(kp.y / p.height);
      }
    }
  }
  return out;
}

std::vector<double> train_pose_autoencoder(PoseAutoencoder& net, const torch::Tensor& poses, int steps,
                                           std::uint64_t seed) {
  torch::manual_seed(seed);
  net->train();
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(1e-3));
  const auto n = poses.size(0);
  const auto batch = std::min<std::int64_t>(64, n);
  std::vector<double> losses;
  for (int s = 0; s < steps; ++s) {
    const auto x = poses.index_select(0, torch::randint(n, {batch}, torch::kLong));
    const auto loss = torch::mse_loss(net->forward(x), x);
    opt.zero_grad();
    loss.backward();
    opt.step();
    losses.push_back(loss.item<double>());
  }
  net->eval();
  return losses;
}

FeatureMatrix gesture_features(PoseAutoencoder& net, const torch::Tensor& poses) {
  torch::NoGradGuard no_grad;
  const auto z = net->encode(poses).to(torch::kFloat64).contiguous();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> rows(
      z.data_ptr<double>(), z.size(0), z.size(1));
  return FeatureMatrix(rows);
}

std::string checkpoint_hash(const PoseAutoencoder& net) {
  Archive a;
  export_module(*net, "pose_ae", a);
  // Hash names and raw values directly. Each encoded tensor ends in its own
  // CRC, which makes an outer CRC blind to the payload.
  std::vector<std::uint8_t> bytes;
  for (const auto& [name, tensor] : a.tensors) {
    bytes.insert(bytes.end(), name.begin(), name.end());
    const auto t = tensor.to(torch::kCPU).contiguous();
    const auto* data = static_cast<const std::uint8_t*>(t.data_ptr());
    bytes.insert(bytes.end(), data, data + t.numel() * t.element_size());
  }
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", crc32(bytes));
  return buf;
}

nlohmann::json metric_report(const std::string& metric, double value, std::int64_t n_samples,
                             const std::string& feature_ckpt_hash, const std::string& config_digest) {
  return {{"metric", metric},
          {"value", value},
          {"n_samples", n_samples},
          {"feature_ckpt_hash", feature_ckpt_hash},
          {"config_digest", config_digest}};
}

}  // namespace partsync::metrics
