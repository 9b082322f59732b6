// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <torch/torch.h>

#include "partsync/error.hpp"
#include "partsync/guidance.hpp"

using namespace partsync;

namespace {

bool bit_identical(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) return false;
  const auto ac = a.contiguous(), bc = b.contiguous();
  return std::memcmp(ac.data_ptr(), bc.data_ptr(), ac.nbytes()) == 0;
}

struct Rig {
  Denoiser denoiser{nullptr};
  GuidanceClassifiers classifiers;
  SamplingCondition cond;
  RegionMasks masks;
  torch::Tensor face;  // [F, h, w]
  int F = 3;
};

Rig make_rig(bool first_frame = false) {
  torch::manual_seed(21);
  Rig r;
  DenoiserOptions d;
  d.latent_channels = 4;
  d.width = 16;
  d.audio_dim = 4;
  d.heads = 2;
  r.denoiser = Denoiser(d);
  {
    torch::NoGradGuard ng;
    for (auto& p : r.denoiser->parameters()) p.add_(0.1 * torch::randn_like(p));
  }
  r.denoiser->eval();
  ClassifierOptions c;
  c.encoder = d;
  c.window = 1;
  c.layers = 1;
  c.heads = 2;
  r.classifiers.face = SyncClassifier(c);
  r.classifiers.nonface = SyncClassifier(c);
  r.classifiers.face->eval();
  r.classifiers.nonface->eval();
  r.cond = {torch::randn({1, 4, 4, 4}), torch::randn({1, r.F, 3, 4}), {}};
  if (first_frame) r.cond.first_frame = torch::randn({1, 4, 4, 4});
  r.face = torch::zeros({r.F, 4, 4});
  r.face.narrow(1, 0, 2).narrow(2, 1, 2).fill_(1);
  r.masks = make_region_masks(r.face);
  return r;
}

GuidanceConfig cfg(GuidanceMode mode, double rate = 0.5) {
  GuidanceConfig g;
  g.mode = mode;
  g.rate = rate;
  return g;
}

}  // namespace

TEST_CASE("guided step counts") {
  CHECK(cfg(GuidanceMode::sg, 0.5).guided_steps(30) == 15);
  CHECK(cfg(GuidanceMode::sg, 0.0).guided_steps(30) == 0);
  CHECK(cfg(GuidanceMode::dg, 0.25).guided_steps(20) == 5);
  CHECK(cfg(GuidanceMode::dg, 0.3).guided_steps(20) == 6);
  CHECK(cfg(GuidanceMode::sg, 0.31).guided_steps(20) == 7);
  CHECK(cfg(GuidanceMode::sg, 1.0).guided_steps(20) == 19);
  CHECK(cfg(GuidanceMode::off, 1.0).guided_steps(20) == 0);
}

TEST_CASE("config parsing and validation") {
  CHECK(guidance_mode_from_string("dg") == GuidanceMode::dg);
  CHECK(guidance_sign_from_string("descend") == GuidanceSign::descend);
  CHECK_THROWS_AS(guidance_mode_from_string("both"), ConfigError);
  auto g = cfg(GuidanceMode::sg);
  g.rate = 1.5;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.rate = 0.5;
  g.lambda_diff = -1;
  CHECK_NOTHROW(g.validate());
  g.dg_strict_noop = true;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.lambda_diff = std::nan("");
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("region masks are a complementary partition") {
  const auto r = make_region_masks(torch::bernoulli(torch::full({2, 3, 4, 4}, 0.3)));
  CHECK(r.face.sizes() == torch::IntArrayRef({2, 3, 1, 4, 4}));
  CHECK(torch::equal(r.face + r.nonface, torch::ones_like(r.face)));
}

TEST_CASE("guide: zero weights return the solver state bit-identically") {
  auto rig = make_rig();
  DdimSolver solver(rig.denoiser, make_schedule(200, ScheduleKind::linear_beta), 10);
  auto g = cfg(GuidanceMode::sg);
  g.lambda_face = g.lambda_nonface = 0;
  const auto z = torch::randn({1, rig.F, 4, 4, 4});
  GuidanceStats stats;
  const auto chain = guide(z, 3, solver, rig.cond, rig.classifiers, rig.masks, g, &stats);
  CHECK(bit_identical(chain.star, z));
  CHECK(stats.gradient_calls == 0);
}

TEST_CASE("guide: chain matches a hand recomputation from the regional gradients") {
  auto rig = make_rig();
  DdimSolver solver(rig.denoiser, make_schedule(200, ScheduleKind::linear_beta), 10);
  const auto g = cfg(GuidanceMode::sg);
  torch::manual_seed(22);
  const auto z = torch::randn({1, rig.F, 4, 4, 4});
  const int index = 4;
  const auto chain = guide(z, index, solver, rig.cond, rig.classifiers, rig.masks, g);
  const double sigma = solver.sigma_at(index);
  const auto t = torch::full({1}, solver.timesteps()[index], torch::kLong);
  const auto g_nf = sync_gradient(rig.classifiers.nonface, z, rig.cond.audio, t, rig.masks.nonface);
  const auto nonface = z + g.lambda_nonface * sigma * g_nf;
  const auto g_f = sync_gradient(rig.classifiers.face, nonface, rig.cond.audio, t, rig.masks.face);
  const auto face = z + g.lambda_face * sigma * g_f;
  const auto star = face + nonface - z;
  CHECK((chain.nonface - nonface).abs().max().item<double>() < 1e-6);
  CHECK((chain.face - face).abs().max().item<double>() < 1e-6);
  CHECK((chain.star - star).abs().max().item<double>() < 1e-6);
}

TEST_CASE("property: each gradient step touches only its own region") {
  auto rig = make_rig();
  DdimSolver solver(rig.denoiser, make_schedule(200, ScheduleKind::linear_beta), 10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto z = torch::randn({1, rig.F, 4, 4, 4});
    const auto chain = guide(z, 1 + trial, solver, rig.cond, rig.classifiers, rig.masks, cfg(GuidanceMode::sg));
    CHECK(((chain.nonface - chain.z) * rig.masks.face).abs().max().item<double>() == 0.0);
    CHECK(((chain.face - chain.z) * rig.masks.nonface).abs().max().item<double>() == 0.0);
    const auto lhs = chain.star - chain.z;
    const auto rhs = (chain.face - chain.z) + (chain.nonface - chain.z);
    CHECK((lhs - rhs).abs().max().item<double>() < 1e-6);
    CHECK((chain.nonface - chain.z).abs().max().item<double>() > 0);
    CHECK((chain.face - chain.z).abs().max().item<double>() > 0);
  }
}

TEST_CASE("zero face weight makes star equal the non-face state") {
  auto rig = make_rig();
  DdimSolver solver(rig.denoiser, make_schedule(200, ScheduleKind::linear_beta), 10);
  auto g = cfg(GuidanceMode::sg);
  g.lambda_face = 0;
  const auto z = torch::randn({1, rig.F, 4, 4, 4});
  const auto chain = guide(z, 2, solver, rig.cond, rig.classifiers, rig.masks, g);
  CHECK(bit_identical(chain.face, z));
  CHECK(torch::allclose(chain.star, chain.nonface));
}

TEST_CASE("dg_step: degenerates to sg at lambda_diff = 0 and follows the literal formula") {
  auto rig = make_rig(true);
  DdimSolver solver(rig.denoiser, make_schedule(200, ScheduleKind::linear_beta), 10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto shape = std::vector<std::int64_t>{1, rig.F, 4, 4, 4};
    GuidanceChain chain{torch::randn(shape), torch::randn(shape), torch::randn(shape), torch::randn(shape),
                        1 + trial % 8};
    auto g = cfg(GuidanceMode::dg);
    g.lambda_diff = 0;
    CHECK(bit_identical(dg_step(chain, solver, rig.cond, rig.masks, g), sg_update(chain, solver, rig.cond)));
  }
  // Zero gradients: every chain state equals z, so the update is (1 + lambda_diff) f(z).
  auto g = cfg(GuidanceMode::dg);
  auto plain_rig = make_rig(false);
  const auto z = torch::randn({1, plain_rig.F, 4, 4, 4});
  GuidanceChain same{z, z, z, z, 5};
  const auto f = solver.step(z, plain_rig.cond, 5);
  CHECK(torch::allclose(dg_step(same, solver, plain_rig.cond, plain_rig.masks, g), (1 + g.lambda_diff) * f));
  g.dg_strict_noop = true;
  CHECK(torch::allclose(dg_step(same, solver, plain_rig.cond, plain_rig.masks, g), f, 1e-6, 1e-6));
  // With a first-frame condition the pinned frame survives compensation.
  GuidanceChain pinned{z, z, z, z, 5};
  g.dg_strict_noop = false;
  const auto out = dg_step(pinned, solver, rig.cond, rig.masks, g);
  CHECK(torch::equal(out.select(1, 0), rig.cond.first_frame));
}

TEST_CASE("sampling: off, zero weights and zero rate agree bitwise") {
  auto rig = make_rig();
  DdimSolver solver(rig.denoiser, make_schedule(200, ScheduleKind::linear_beta), 8);
  const auto start = make_unified_input(std::nullopt, 1, rig.F, 4, 4, 4, 5);
  const auto off = sample_video(solver, rig.classifiers, start, rig.cond, rig.masks, cfg(GuidanceMode::off));
  auto zero = cfg(GuidanceMode::sg);
  zero.lambda_face = zero.lambda_nonface = 0;
  CHECK(bit_identical(off, sample_video(solver, rig.classifiers, start, rig.cond, rig.masks, zero)));
  CHECK(bit_identical(off, sample_video(solver, rig.classifiers, start, rig.cond, rig.masks, cfg(GuidanceMode::sg, 0))));
  CHECK(bit_identical(off, sample_video(solver, rig.classifiers, start, rig.cond, rig.masks, cfg(GuidanceMode::dg, 0))));
  CHECK(bit_identical(off, sample_plain(solver, start, rig.cond)));
  const auto guided = sample_video(solver, rig.classifiers, start, rig.cond, rig.masks, cfg(GuidanceMode::sg));
  CHECK(!bit_identical(off, guided));
}

TEST_CASE("solver and gradient call accounting per guided step") {
  auto rig = make_rig();
  const int N = 8;
  DdimSolver solver(rig.denoiser, make_schedule(200, ScheduleKind::linear_beta), N);
  const auto start = make_unified_input(std::nullopt, 1, rig.F, 4, 4, 4, 6);
  for (const double rate : {0.25, 0.5, 1.0}) {
    GuidanceStats sg, dg;
    const auto gs = cfg(GuidanceMode::sg, rate), gd = cfg(GuidanceMode::dg, rate);
    sample_video(solver, rig.classifiers, start, rig.cond, rig.masks, gs, &sg);
    sample_video(solver, rig.classifiers, start, rig.cond, rig.masks, gd, &dg);
    const int G = gs.guided_steps(N);
    CHECK(sg.guided_steps == G);
    CHECK(sg.solver_calls == N);
    CHECK(dg.solver_calls == (N - G) + 3 * G);
    CHECK(sg.gradient_calls == 2 * G);
    CHECK(dg.gradient_calls == 2 * G);
    CHECK(sg.step_seconds.size() == static_cast<std::size_t>(N));
  }
}

TEST_CASE("missing classifiers are rejected in guided modes") {
  auto rig = make_rig();
  DdimSolver solver(rig.denoiser, make_schedule(200, ScheduleKind::linear_beta), 4);
  GuidanceClassifiers none;
  const auto start = make_unified_input(std::nullopt, 1, rig.F, 4, 4, 4, 7);
  CHECK_THROWS(sample_video(solver, none, start, rig.cond, rig.masks, cfg(GuidanceMode::sg)));
  CHECK_NOTHROW(sample_video(solver, none, start, rig.cond, rig.masks, cfg(GuidanceMode::off)));
}

TEST_CASE("long video: shared boundaries and unique frame count") {
  auto rig = make_rig();
  DdimSolver solver(rig.denoiser, make_schedule(200, ScheduleKind::linear_beta), 6);
  const int L = 4;
  for (const int total : {7, 13, 11}) {
    const auto audio = torch::randn({total, 3, 4});
    const auto face = torch::zeros({total, 4, 4});
    const auto lv = generate_long(solver, rig.classifiers, torch::randn({4, 4, 4}), audio, face, L,
                                  cfg(GuidanceMode::sg), 3);
    std::int64_t sum = 0;
    for (std::size_t k = 0; k < lv.segments.size(); ++k) {
      sum += lv.segments[k].size(0);
      if (k + 1 < lv.segments.size()) CHECK(bit_identical(lv.segments[k][-1], lv.segments[k + 1][0]));
    }
    CHECK(lv.frames.size(0) == total);
    CHECK(sum - static_cast<std::int64_t>(lv.segments.size() - 1) == total);
  }
  CHECK_THROWS(generate_long(solver, rig.classifiers, torch::randn({4, 4, 4}), torch::randn({7, 3, 4}),
                             torch::zeros({7, 4, 4}), 1, cfg(GuidanceMode::off), 0));
  CHECK_THROWS(generate_long(solver, rig.classifiers, torch::randn({4, 4, 4}), torch::randn({5, 3, 4}),
                             torch::zeros({5, 4, 4}), 4, cfg(GuidanceMode::off), 0));
}
