// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "partsync/logging.hpp"
#include "partsync/par_mask.hpp"

namespace partsync::metrics {

/// One feature vector per row.
using FeatureMatrix = Eigen::MatrixXd;

struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Sample mean and unbiased covariance. When `shrinkage` > 0 the covariance
/// is pulled toward (trace / d) * I by that fraction.
GaussianFit fit_gaussian(const FeatureMatrix& x, double shrinkage = 0.0);

struct FgdOptions {
  /// Used when a set has at most d samples; 0 turns rank-deficient input
  /// into an error instead.
  double fallback_shrinkage = 0.1;
};

/// Frechet distance between Gaussian fits of two feature sets.
double fgd(const FeatureMatrix& real, const FeatureMatrix& generated, const FgdOptions& options = {},
           Logger* log = nullptr);

/// Frechet distance between two fitted Gaussians. Tr((S1 S2)^1/2) is taken
/// from the eigenvalues of S1^1/2 S2 S1^1/2; negative eigenvalues clip to 0.
double frechet_distance(const GaussianFit& a, const GaussianFit& b, Logger* log = nullptr);

/// Mean Euclidean distance over `n_pairs` random pairs of distinct rows.
double diversity(const FeatureMatrix& features, int n_pairs, std::uint64_t seed = 0);

struct BeatTrack {
  std::vector<double> audio_beats;   // seconds, increasing
  std::vector<double> motion_beats;  // seconds, increasing
};

/// Mean over motion beats of exp(-d^2 / (2 sigma_b^2)), d the distance to
/// the nearest audio beat. No audio beats scores 0 with a warning.
double bas(const BeatTrack& beats, double sigma_b, Logger* log = nullptr);

/// Half-wave-rectified first difference of log frame energy; entry 0 is 0.
std::vector<double> onset_envelope(const std::vector<double>& energies);

/// Peaks of the onset envelope, greedily kept strongest first with at least
/// `min_separation` seconds between beats. Frame k sits at k / fps.
std::vector<double> audio_beats(const std::vector<double>& energies, double fps, double min_separation);

/// Mean keypoint displacement from frame k-1 to k, for k = 1..F-1.
std::vector<double> keypoint_speed(const par::PoseSequence& pose);

/// Interior local minima of keypoint_speed, at time k / fps.
std::vector<double> motion_beats(const par::PoseSequence& pose);

struct RunTiming {
  double sampling_seconds = 0;
  double decoding_seconds = 0;
};

struct TimeCost {
  double mean_sampling = 0;
  double mean_decoding = 0;
  double mean_total = 0;
  long long rounded = 0;  // mean_total rounded to the nearest integer
};

TimeCost time_cost(const std::vector<RunTiming>& runs);

class PoseAutoencoderImpl : public torch::nn::Module {
 public:
  PoseAutoencoderImpl(int input_dim, int feature_dim, int hidden = 128);

  torch::Tensor encode(const torch::Tensor& x);
  torch::Tensor forward(const torch::Tensor& x);

  int input_dim() const { return input_dim_; }
  int feature_dim() const { return feature_dim_; }

 private:
  int input_dim_, feature_dim_;
  torch::nn::Linear enc1_{nullptr}, enc2_{nullptr}, dec1_{nullptr}, dec2_{nullptr};
};
TORCH_MODULE(PoseAutoencoder);

/// Clip-level pose vector: every keypoint's (x / width, y / height) for every
/// frame, [N, F * J * 2]. All sequences must share F and J.
torch::Tensor pose_vectors(const std::vector<par::PoseSequence>& poses);

std::vector<double> train_pose_autoencoder(PoseAutoencoder& net, const torch::Tensor& poses, int steps,
                                           std::uint64_t seed);

FeatureMatrix gesture_features(PoseAutoencoder& net, const torch::Tensor& poses);

/// Hex CRC32 of the autoencoder's serialized parameters.
std::string checkpoint_hash(const PoseAutoencoder& net);

/// {metric, value, n_samples, feature_ckpt_hash, config_digest}
nlohmann::json metric_report(const std::string& metric, double value, std::int64_t n_samples,
                             const std::string& feature_ckpt_hash, const std::string& config_digest);

}  // namespace partsync::metrics
