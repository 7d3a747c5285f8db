// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "mcdepth/error.hpp"
#include "mcdepth/train.hpp"
#include "test_util.hpp"

namespace mcdepth {
namespace {

TEST(AdamW, HandEvaluatedStep) {
  std::vector<double> w = {1.0};
  const std::vector<double> g = {0.1};
  AdamMoments state;
  adamw_step(w, g, state, 1, 1e-3, 0.9, 0.999, 1e-8, 0.01);
  const double expected = 1.0 - 1e-3 * (0.1 / (0.1 + 1e-8) + 0.01 * 1.0);
  EXPECT_NEAR(w[0], expected, 1e-15);
  EXPECT_NEAR(w[0], 0.99899, 1e-8);
  EXPECT_NEAR(state.m[0], 0.01, 1e-15);
  EXPECT_NEAR(state.v[0], 1e-5, 1e-18);
}

TEST(AdamW, ZeroGradientZeroDecayKeepsWeights) {
  std::vector<double> w = {0.3, -2.0, 5.0};
  const std::vector<double> g(3, 0.0);
  AdamMoments state;
  for (long t = 1; t <= 5; ++t) adamw_step(w, g, state, t, 1e-2, 0.9, 0.999, 1e-8, 0.0);
  EXPECT_EQ(w, (std::vector<double>{0.3, -2.0, 5.0}));
}

TEST(CosineLr, Examples) {
  TrainConfig c;
  c.lr = 1e-5;
  c.eta_min = 1e-8;
  c.t_max = 35;
  EXPECT_EQ(cosine_lr(0, c), 1e-5);
  EXPECT_NEAR(cosine_lr(35, c), 1e-8, 1e-20);
  EXPECT_NEAR(cosine_lr(17.5, c), (1e-5 + 1e-8) / 2.0, 1e-20);
  EXPECT_NEAR(cosine_lr(17.5, c), 5.005e-6, 1e-18);
  for (int t = 1; t <= 35; ++t) EXPECT_LT(cosine_lr(t, c), cosine_lr(t - 1, c));
}

TEST(ClipGradNorm, Examples) {
  std::vector<double> a = {3.0}, b = {4.0};
  std::vector<std::span<double>> grads = {a, b};
  EXPECT_DOUBLE_EQ(clip_grad_norm(grads, 1.0), 5.0);
  EXPECT_NEAR(a[0], 0.6, 1e-15);
  EXPECT_NEAR(b[0], 0.8, 1e-15);

  std::vector<double> c = {0.3, 0.4};
  std::vector<std::span<double>> small = {c};
  EXPECT_DOUBLE_EQ(clip_grad_norm(small, 1.0), 0.5);
  EXPECT_EQ(c, (std::vector<double>{0.3, 0.4}));
}

TEST(ClipGradNorm, PostNormIsMinOfPreAndMax) {
  SplitMix64 rng(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> g(7);
    const double s = std::exp(rng.uniform(-4.0, 4.0));
    for (double& x : g) x = s * rng.uniform(-1.0, 1.0);
    std::vector<std::span<double>> grads = {g};
    const double pre = clip_grad_norm(grads, 1.0);
    EXPECT_NEAR(global_norm(grads), std::min(pre, 1.0), 1e-12);
  }
}

SampleRecord point_sample(int w, int h, int u, int v, double z) {
  SampleRecord s;
  s.image = Image(w, h, 0.25);
  s.sparse = DepthMap(w, h);
  s.sparse.at(u, v) = z;
  s.intrinsics = {50.0, 50.0, 0.5 * w - 0.5, 0.5 * h - 0.5, w, h};
  return s;
}

TEST(Augment, UnitScaleIsCropOnly) {
  SplitMix64 rng(4);
  SampleRecord s;
  s.image = testing::random_image(20, 16, rng);
  s.sparse = testing::random_depth(20, 16, rng);
  s.dense = testing::random_depth(20, 16, rng, 1.0);
  s.intrinsics = {30, 30, 9.5, 7.5, 20, 16};
  const AugmentedSample a = augment_with(s, 1.0, 3, 2, 12);
  for (int v = 0; v < 12; ++v) {
    for (int u = 0; u < 12; ++u) {
      EXPECT_EQ(a.sparse.at(u, v), s.sparse.at(u + 3, v + 2));
      EXPECT_EQ(a.dense->at(u, v), s.dense->at(u + 3, v + 2));
      EXPECT_EQ(a.image.at(u, v, 1), s.image.at(u + 3, v + 2, 1));
    }
  }
  EXPECT_EQ(a.intrinsics.fx, 30.0);
  EXPECT_EQ(a.intrinsics.cx, 6.5);
  EXPECT_EQ(a.intrinsics.cy, 5.5);
}

TEST(Augment, ScaledIntrinsicsLocateResizedPoint) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 40, h = 30, crop = 24;
    // A camera-frame point and its pixel in the original image.
    const double z = rng.uniform(2.0, 60.0);
    const int u = 4 + static_cast<int>(rng.below(32)), v = 4 + static_cast<int>(rng.below(22));
    const SampleRecord s = point_sample(w, h, u, v, z);
    const double x = (u - s.intrinsics.cx) * z / s.intrinsics.fx, y = (v - s.intrinsics.cy) * z / s.intrinsics.fy;

    const double scale = rng.uniform(0.85, 1.15);
    const int rw = static_cast<int>(std::lround(w * scale)), rh = static_cast<int>(std::lround(h * scale));
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(rw - crop + 1)));
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(rh - crop + 1)));
    const AugmentedSample a = augment_with(s, scale, x0, y0, crop);
    const CameraIntrinsics& K = a.intrinsics;
    const double pu = K.fx * x / z + K.cx, pv = K.fy * y / z + K.cy;
    const double sx = static_cast<double>(rw) / w, sy = static_cast<double>(rh) / h;

    for (int vv = 0; vv < crop; ++vv) {
      for (int uu = 0; uu < crop; ++uu) {
        if (!a.sparse.valid(uu, vv)) continue;
        EXPECT_LE(std::abs(uu - pu), 0.5 * std::max(1.0, sx) + 1e-9);
        EXPECT_LE(std::abs(vv - pv), 0.5 * std::max(1.0, sy) + 1e-9);
        EXPECT_DOUBLE_EQ(a.sparse.at(uu, vv), z / scale);
      }
    }
    const int ru = static_cast<int>(std::lround(pu)), rv = static_cast<int>(std::lround(pv));
    if (sx >= 1.0 && sy >= 1.0 && ru >= 0 && rv >= 0 && ru < crop && rv < crop) {
      EXPECT_LE(std::abs(ru - pu), 0.5);
      EXPECT_TRUE(a.sparse.valid(ru, rv)) << "trial " << trial;
    }
  }
}

class TrainFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    DatasetSpec sparse = orchard_preset(40, 40, 40.0);
    sparse.count = 6;
    sparse.seed = 11;
    DatasetSpec dense = stereo_preset(40, 40, 48.0);
    dense.count = 6;
    dense.seed = 12;
    sparse_ = new Dataset(generate_dataset(sparse));
    dense_ = new Dataset(generate_dataset(dense));
  }
  static void TearDownTestSuite() {
    delete sparse_;
    delete dense_;
  }

  static TrainConfig small_config() {
    TrainConfig c;
    c.lr = 1e-3;
    c.eta_min = 1e-6;
    c.t_max = 5;
    c.epochs = 5;
    c.batch_size = 3;
    c.crop = 32;
    c.seed = 9;
    c.model.enc1_channels = 4;
    c.model.enc2_channels = 8;
    c.model.enc3_channels = 8;
    return c;
  }

  static Dataset* sparse_;
  static Dataset* dense_;
};

Dataset* TrainFixture::sparse_ = nullptr;
Dataset* TrainFixture::dense_ = nullptr;

TEST_F(TrainFixture, AugmentKeepsSparseReturns) {
  const TrainConfig c = small_config();
  SplitMix64 rng(6);
  for (const Dataset* ds : {sparse_, dense_}) {
    for (const auto& s : ds->samples) {
      ASSERT_GT(s.sparse.count_valid(), 0u);
      for (int k = 0; k < 5; ++k) EXPECT_GE(augment(s, c, rng).sparse.count_valid(), 1u);
    }
  }
}

TEST(MixedSampler, VisitsEverySampleOnceInHomogeneousBatches) {
  for (double ratio : {0.5, 0.25, 0.8}) {
    const MixedSampler sampler(13, 29, 4, ratio, 3);
    for (int epoch = 0; epoch < 3; ++epoch) {
      std::multiset<int> seen[2];
      const auto batches = sampler.epoch(epoch);
      for (const auto& b : batches) {
        ASSERT_TRUE(b.source == 0 || b.source == 1);
        EXPECT_LE(b.indices.size(), 4u);
        for (int i : b.indices) seen[b.source].insert(i);
      }
      for (int s = 0; s < 2; ++s) {
        const int n = s == 0 ? 13 : 29;
        ASSERT_EQ(seen[s].size(), static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) EXPECT_EQ(seen[s].count(i), 1u);
      }
    }
    EXPECT_NE(sampler.epoch(0)[0].indices, sampler.epoch(1)[0].indices);
  }
  const MixedSampler a(5, 5, 2, 0.5, 1), b(5, 5, 2, 0.5, 1);
  EXPECT_EQ(a.epoch(2).size(), b.epoch(2).size());
  for (std::size_t i = 0; i < a.epoch(2).size(); ++i) EXPECT_EQ(a.epoch(2)[i].indices, b.epoch(2)[i].indices);
}

TEST(TrainConfig, KeyValueRoundTripAndValidation) {
  TrainConfig c;
  c.lr = 3e-4;
  c.crop = 48;
  c.freeze_encoder = true;
  c.model.enc3_channels = 24;
  c.weights.gamma = 0.25;
  const TrainConfig back = TrainConfig::from_kv(c.to_kv());
  EXPECT_EQ(back.to_kv().format(), c.to_kv().format());
  EXPECT_EQ(back.model, c.model);

  KeyValues kv = c.to_kv();
  kv.set("no_such_key", 1);
  EXPECT_THROW((void)TrainConfig::from_kv(kv), Error);
  TrainConfig bad = c;
  bad.crop = 44;  // not a multiple of the network stride
  EXPECT_THROW(bad.validate(), Error);
}

TEST_F(TrainFixture, LossDecreasesAndScheduleIsExact) {
  const TrainConfig c = small_config();
  const TrainResult r = fit(dense_, sparse_, c);
  ASSERT_EQ(r.epochs.size(), 5u);
  EXPECT_GT(r.epochs.front().mean_loss, r.epochs.back().mean_loss);
  for (const auto& s : r.steps) {
    const double closed = c.eta_min + (c.lr - c.eta_min) / 2.0 * (1.0 + std::cos(std::numbers::pi * s.epoch / c.t_max));
    EXPECT_NEAR(s.lr, closed, 1e-15);
    EXPECT_LE(s.clipped_norm, 1.0 + 1e-12);
    EXPECT_TRUE(s.weights.within_bounds());
  }
}

TEST_F(TrainFixture, SameSeedIsBitExact) {
  TrainConfig c = small_config();
  c.epochs = 2;
  const TrainResult a = fit(dense_, sparse_, c);
  const TrainResult b = fit(dense_, sparse_, c);
  EXPECT_TRUE(a.state == b.state);
  c.seed = 10;
  const TrainResult other = fit(dense_, sparse_, c);
  EXPECT_FALSE(a.state == other.state);
}

TEST_F(TrainFixture, FreezeEncoderKeepsEncoderBits) {
  TrainConfig c = small_config();
  c.epochs = 2;
  c.freeze_encoder = true;
  DepthNet initial(c.model);
  initial.init(SplitMix64(c.seed).split("init").next());
  const TrainResult r = fit(dense_, sparse_, c);
  const auto& before = initial.parameters();
  const auto& after = r.state.model.parameters();
  ASSERT_EQ(before.size(), after.size());
  bool decoder_moved = false;
  for (std::size_t p = 0; p < before.size(); ++p) {
    if (before[p].encoder) {
      EXPECT_EQ(before[p].value, after[p].value) << before[p].name;
    } else {
      decoder_moved = decoder_moved || before[p].value != after[p].value;
    }
  }
  EXPECT_TRUE(decoder_moved);
}

TEST_F(TrainFixture, ResumeFromSavedStateIsBitExact) {
  const testing::TempDir dir("resume");
  TrainConfig c = small_config();
  c.epochs = 4;
  const TrainResult full = fit(dense_, sparse_, c);

  FitOptions first;
  first.stop_after_epoch = 2;
  const TrainResult half = fit(dense_, sparse_, c, first);
  half.state.save(dir.path());
  FitOptions second;
  second.resume = TrainerState::load(dir.path());
  EXPECT_TRUE(*second.resume == half.state);
  const TrainResult rest = fit(dense_, sparse_, c, second);
  EXPECT_TRUE(rest.state == full.state);
  ASSERT_EQ(rest.epochs.size(), 2u);
  EXPECT_EQ(rest.epochs.back().mean_loss, full.epochs.back().mean_loss);
}

TEST_F(TrainFixture, FrozenWeightsStayAtConfig) {
  TrainConfig c = small_config();
  c.epochs = 1;
  c.freeze_weights = true;
  const TrainResult r = fit(dense_, sparse_, c);
  EXPECT_EQ(r.state.weights.alpha, c.weights.alpha);
  EXPECT_EQ(r.state.weights.gamma, c.weights.gamma);
}

TEST_F(TrainFixture, ValidationRowsPerMask) {
  TrainConfig c = small_config();
  c.epochs = 1;
  FitOptions o;
  o.validation = {{"stereo", dense_}, {"orchard", sparse_}};
  const TrainResult r = fit(dense_, sparse_, c, o);
  const auto& rows = r.epochs.front().validation;
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].mask, "sparse");
  EXPECT_EQ(rows[1].mask, "dense");
  EXPECT_EQ(rows[2].split, "orchard");
  for (const auto& row : rows) EXPECT_GT(row.metrics.n_valid, 0u);
}

TEST_F(TrainFixture, AllEmptyBatchesAbort) {
  Dataset empty = *sparse_;
  for (auto& s : empty.samples) s.sparse = DepthMap(s.sparse.width, s.sparse.height);
  TrainConfig c = small_config();
  c.epochs = 1;
  try {
    (void)fit(nullptr, &empty, c);
    FAIL() << "expected kData";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

}  // namespace
}  // namespace mcdepth
