// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/guidance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "partsync/error.hpp"

namespace partsync {

GuidanceMode guidance_mode_from_string(std::string_view name) {
  if (name == "off") return GuidanceMode::off;
  if (name == "sg") return GuidanceMode::sg;
  if (name == "dg") return GuidanceMode::dg;
  throw ConfigError("unknown guidance mode '" + std::string(name) + "' (off, sg, dg)");
}

std::string_view to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::sg: return "sg";
    case GuidanceMode::dg: return "dg";
    default: return "off";
  }
}

GuidanceSign guidance_sign_from_string(std::string_view name) {
  if (name == "ascend") return GuidanceSign::ascend;
  if (name == "descend") return GuidanceSign::descend;
  throw ConfigError("unknown guidance sign '" + std::string(name) + "' (ascend, descend)");
}

std::string_view to_string(GuidanceSign sign) { return sign == GuidanceSign::ascend ? "ascend" : "descend"; }

void GuidanceConfig::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("guidance rate must lie in [0, 1]");
  if (!std::isfinite(lambda_face) || !std::isfinite(lambda_nonface) || !std::isfinite(lambda_diff)) {
    throw ConfigError("guidance weights must be finite");
  }
  if (dg_strict_noop && lambda_diff <= -1.0) throw ConfigError("lambda_diff must exceed -1 with dg_strict_noop");
}

int GuidanceConfig::guided_steps(int n_steps) const {
  if (mode == GuidanceMode::off || n_steps < 2) return 0;
  const int g = static_cast<int>(std::ceil(rate * n_steps - 1e-9));
  return std::clamp(g, 0, n_steps - 1);
}

RegionMasks make_region_masks(const torch::Tensor& face) {
  torch::Tensor f;
  if (face.dim() == 3) {
    f = face.unsqueeze(0);
  } else if (face.dim() == 4) {
    f = face;
  } else {
    throw std::invalid_argument("face mask must be [F, h, w] or [B, F, h, w]");
  }
  f = f.to(torch::kFloat32).unsqueeze(2);
  return {f, 1 - f};
}

namespace {

void check_finite(const torch::Tensor& x, const char* what, int index) {
  if (!torch::isfinite(x).all().item<bool>()) {
    throw NumericError(std::string("guidance: non-finite ") + what + " at sub-schedule index " +
                       std::to_string(index) + " (max |x| = " + std::to_string(x.abs().nan_to_num().max().item<double>()) +
                       ")");
  }
}

torch::Tensor classifier_gradient(SyncClassifier& net, const torch::Tensor& z, const SamplingCondition& cond,
                                  int t, const torch::Tensor& mask, GuidanceStats* stats) {
  if (!net) throw MissingInputError("guidance: classifier checkpoint not loaded");
  const auto tt = torch::full({z.size(0)}, t, torch::kLong);
  if (stats != nullptr) ++stats->gradient_calls;
  return sync_gradient(net, z, cond.audio, tt, mask);
}

}  // namespace

GuidanceChain guide(const torch::Tensor& z, int index, DdimSolver& solver, const SamplingCondition& cond,
                    GuidanceClassifiers& classifiers, const RegionMasks& masks, const GuidanceConfig& cfg,
                    GuidanceStats* stats) {
  const int t = solver.timesteps().at(index);
  const double sigma = solver.sigma_at(index);
  // The gradient is of log s; descending log s is the literal "minus" form.
  const double dir = cfg.sign == GuidanceSign::ascend ? 1.0 : -1.0;

  GuidanceChain c;
  c.z = z;
  c.index = index;
  c.nonface = z;
  if (cfg.lambda_nonface != 0.0) {
    const auto g = classifier_gradient(classifiers.nonface, z, cond, t, masks.nonface, stats);
    c.nonface = z + (dir * cfg.lambda_nonface * sigma) * g;
  }
  c.face = z;
  if (cfg.lambda_face != 0.0) {
    const auto g = classifier_gradient(classifiers.face, c.nonface, cond, t, masks.face, stats);
    c.face = z + (dir * cfg.lambda_face * sigma) * g;
  }
  c.star = c.face + c.nonface - z;
  check_finite(c.star, "guided latent", index);
  return c;
}

GuidanceChain sg_step(const torch::Tensor& z_prev, int i, DdimSolver& solver, const SamplingCondition& cond,
                      GuidanceClassifiers& classifiers, const RegionMasks& masks, const GuidanceConfig& cfg,
                      GuidanceStats* stats) {
  const auto z = solver.step(z_prev, cond, i);
  if (stats != nullptr) ++stats->solver_calls;
  check_finite(z, "solver output", i + 1);
  return guide(z, i + 1, solver, cond, classifiers, masks, cfg, stats);
}

torch::Tensor sg_update(const GuidanceChain& chain, DdimSolver& solver, const SamplingCondition& cond) {
  return solver.step(chain.star, cond, chain.index);
}

torch::Tensor dg_step(const GuidanceChain& chain, DdimSolver& solver, const SamplingCondition& cond,
                      const RegionMasks& masks, const GuidanceConfig& cfg) {
  const auto base = solver.step(chain.star, cond, chain.index);
  const auto from_nonface = solver.step(chain.nonface, cond, chain.index);
  const auto from_face = solver.step(chain.face, cond, chain.index);
  auto out = base + cfg.lambda_diff * (from_nonface * masks.face + from_face * masks.nonface);
  if (cfg.dg_strict_noop) out = out / (1.0 + cfg.lambda_diff);
  // The compensation term rescales frame 0 too; restore the pinned frame.
  if (cond.first_frame.defined()) out.select(1, 0).copy_(cond.first_frame);
  check_finite(out, "differential update", chain.index + 1);
  return out;
}

torch::Tensor sample_video(DdimSolver& solver, GuidanceClassifiers& classifiers, const UnifiedInput& start,
                           const SamplingCondition& cond, const RegionMasks& masks, const GuidanceConfig& cfg,
                           GuidanceStats* stats) {
  cfg.validate();
  const int n = solver.n_steps();
  const int guided = cfg.guided_steps(n);
  if (stats != nullptr) stats->guided_steps += guided;
  const auto before = solver.calls();
  auto z = start.z;
  for (int i = 0; i < n; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    if (i >= 1 && i <= guided) {
      const auto chain = guide(z, i, solver, cond, classifiers, masks, cfg, stats);
      z = cfg.mode == GuidanceMode::dg ? dg_step(chain, solver, cond, masks, cfg) : sg_update(chain, solver, cond);
    } else {
      z = solver.step(z, cond, i);
    }
    check_finite(z, "latent", i + 1);
    if (stats != nullptr) {
      stats->step_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
  }
  if (stats != nullptr) stats->solver_calls += solver.calls() - before;
  return z;
}

LongVideo generate_long(DdimSolver& solver, GuidanceClassifiers& classifiers, const torch::Tensor& reference,
                        const torch::Tensor& audio, const torch::Tensor& face, int segment_len,
                        const GuidanceConfig& cfg, std::uint64_t seed) {
  if (segment_len < 2) throw std::invalid_argument("generate_long: segment length must be >= 2");
  if (reference.dim() != 3 || audio.dim() != 3 || face.dim() != 3 || face.size(0) != audio.size(0)) {
    throw std::invalid_argument("generate_long: reference [C, h, w], audio [T, K, d_a], face [T, h, w] required");
  }
  const int total = static_cast<int>(audio.size(0));
  if (total < 2 * segment_len - 1) throw std::invalid_argument("generate_long: audio shorter than two segments");

  const int C = static_cast<int>(reference.size(0)), h = static_cast<int>(reference.size(1)),
            w = static_cast<int>(reference.size(2));
  LongVideo out;
  std::vector<torch::Tensor> pieces;
  torch::Tensor last;
  int begin = 0;
  for (int k = 0; begin < total - 1; ++k) {
    const int len = std::min(segment_len, total - begin);
    std::optional<torch::Tensor> first;
    if (last.defined()) first = last;
    const auto start = make_unified_input(first, 1, len, C, h, w, seed + static_cast<std::uint64_t>(k));
    SamplingCondition cond{reference.unsqueeze(0), audio.narrow(0, begin, len).unsqueeze(0),
                           last.defined() ? last.unsqueeze(0) : torch::Tensor()};
    const auto masks = make_region_masks(face.narrow(0, begin, len));
    const auto seg = sample_video(solver, classifiers, start, cond, masks, cfg, &out.stats).squeeze(0);
    out.segments.push_back(seg);
    pieces.push_back(k == 0 ? seg : seg.narrow(0, 1, len - 1));
    last = seg.select(0, len - 1).clone();
    begin += len - 1;
  }
  out.frames = torch::cat(pieces, 0);
  return out;
}

}  // namespace partsync
