// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0
//
// One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
// arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mcdepth/cloud.hpp"
#include "mcdepth/experiment.hpp"
#include "mcdepth/gradcheck.hpp"
#include "mcdepth/loss.hpp"
#include "mcdepth/metrics.hpp"
#include "mcdepth/simdata.hpp"
#include "mcdepth/stereo.hpp"
#include "mcdepth/train.hpp"

namespace mcdepth {
namespace {

using Clock = std::chrono::steady_clock;
using Eigen::Vector3d;

struct Outcome {
  bool pass = true;
  std::string detail;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

DepthMap random_depth(int w, int h, SplitMix64& rng, double valid, double lo, double hi) {
  DepthMap d(w, h);
  for (double& v : d.values) v = rng.uniform() < valid ? rng.uniform(lo, hi) : 0.0;
  return d;
}

// ------------------------------------------------------------------ 1

Outcome gradients() {
  const GradcheckReport r = run_gradcheck();
  Outcome o;
  double worst = 0.0;
  int trials = 0;
  for (const auto& s : r.suites) {
    worst = std::max(worst, s.max_rel_error);
    trials += s.trials;
    o.check(s.passed(), s.name + " failed " + std::to_string(s.failures) + " trials");
  }
  o.check(!r.suites.empty(), "no suites ran");
  o.check(r.seconds < 60.0, fmt::format("took {:.1f} s", r.seconds));
  if (o.pass) o.detail = fmt::format("{} suites, {} trials, max rel {:.2e}, {:.1f} s", r.suites.size(), trials, worst, r.seconds);
  return o;
}

// ------------------------------------------------------------------ 2

double silog_of(const std::vector<double>& pred, const std::vector<double>& gt, double lambda) {
  ad::Tape t;
  return silog(t.leaf(ad::Tensor({static_cast<int>(pred.size())}, pred)), gt, lambda).item();
}

Outcome silog_algebra() {
  Outcome o;
  SplitMix64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pred(64), gt(64);
    double sum_e = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred[i] = rng.uniform(0.5, 80.0);
      gt[i] = rng.uniform(0.5, 80.0);
      sum_e += std::log(pred[i]) - std::log(gt[i]);
    }
    o.check(silog_of(gt, gt, 0.3) == 0.0, "identity not exactly zero");
    const double base1 = silog_of(pred, gt, 1.0);
    for (double c : {0.5, 2.0, 10.0}) {
      std::vector<double> s = pred;
      for (double& p : s) p *= c;
      const double diff = std::abs(silog_of(s, gt, 1.0) - base1);
      o.check(diff < 1e-9, fmt::format("scale invariance off by {:.2e} at c={}", diff, c));
    }
    const double n = static_cast<double>(pred.size()), base = silog_of(pred, gt, 0.3);
    for (double k : {-1.0, 0.3, 2.0}) {
      std::vector<double> s = pred;
      for (double& p : s) p *= std::exp(k);
      const double expected = 0.7 * (k * sum_e / n + 0.5 * k * k);
      const double diff = std::abs(silog_of(s, gt, 0.3) - base - expected);
      o.check(diff < 1e-9, fmt::format("shift rule off by {:.2e} at k={}", diff, k));
    }
  }
  const double single = silog_of({std::numbers::e * 3.0}, {3.0}, 0.3);
  o.check(std::abs(single - 0.35) < 1e-12, fmt::format("single pixel gave {:.17g}", single));
  if (o.pass) o.detail = fmt::format("identity 0, single pixel {:.15f}", single);
  return o;
}

// ------------------------------------------------------------------ 3

double con_of(double a, double b) {
  ad::Tape t;
  return consistency(t.leaf(ad::Tensor::scalar(a)), t.leaf(ad::Tensor::scalar(b))).item();
}

Outcome consistency_loss() {
  Outcome o;
  SplitMix64 rng(3);
  double hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = std::exp(rng.uniform(-10.0, 8.0));
    const double b = i % 10 == 0 ? 0.0 : std::exp(rng.uniform(-10.0, 8.0));
    const double c = con_of(a, b);
    hi = std::max(hi, c);
    o.check(c >= 0.0 && c < 1.0, fmt::format("({}, {}) -> {} outside [0, 1)", a, b, c));
    o.check(c > 0.0, fmt::format("({}, {}) unequal but zero", a, b));
    o.check(con_of(a, a) < 1e-12, fmt::format("({0}, {0}) not zero", a));
  }
  o.check(con_of(0.0, 0.0) == 0.0, "(0, 0) not zero");
  const double worked = con_of(3.0, 1.0);
  o.check(std::abs(worked - 0.25) < 1e-6, fmt::format("(3, 1) gave {}", worked));
  if (o.pass) o.detail = fmt::format("(3,1) -> {:.9f}, max over random pairs {:.6f}", worked, hi);
  return o;
}

// ------------------------------------------------------------------ 4

MetricsReport naive(const DepthMap& pred, const DepthMap& gt, double cap) {
  double n = 0, d1 = 0, d2 = 0, d3 = 0, rel = 0, sq = 0, sql = 0, l10 = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double g = gt.values[i], p = pred.values[i];
    if (g <= 0 || p <= 0 || (cap > 0 && g > cap)) continue;
    n += 1;
    const double r = std::max(p / g, g / p);
    d1 += r < 1.25;
    d2 += r < 1.5625;
    d3 += r < 1.953125;
    rel += std::abs(p - g) / g;
    sq += (p - g) * (p - g);
    sql += std::pow(std::log(p) - std::log(g), 2);
    l10 += std::abs(std::log10(p) - std::log10(g));
  }
  MetricsReport m;
  m.n_valid = static_cast<std::size_t>(n);
  m.delta1 = d1 / n;
  m.delta2 = d2 / n;
  m.delta3 = d3 / n;
  m.abs_rel = rel / n;
  m.rmse = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(sql / n);
  m.log10 = l10 / n;
  return m;
}

double metrics_gap(const MetricsReport& a, const MetricsReport& b) {
  if (a.n_valid != b.n_valid) return 1e300;
  const double d[] = {a.delta1 - b.delta1, a.delta2 - b.delta2, a.delta3 - b.delta3, a.abs_rel - b.abs_rel,
                      a.rmse - b.rmse,     a.rmse_log - b.rmse_log, a.log10 - b.log10};
  double worst = 0.0;
  for (double x : d) worst = std::max(worst, std::abs(x));
  return worst;
}

DepthMap row(std::vector<double> v) {
  DepthMap d(static_cast<int>(v.size()), 1);
  d.values = std::move(v);
  return d;
}

Outcome metrics_oracle() {
  Outcome o;
  SplitMix64 rng(4);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const DepthMap gt = random_depth(64, 48, rng, 0.5, 0.5, 130.0);
    DepthMap pred = random_depth(64, 48, rng, 0.95, 0.5, 130.0);
    for (std::size_t k = 0; k < pred.size(); ++k) {
      if (gt.values[k] > 0 && rng.uniform() < 0.5) pred.values[k] = gt.values[k] * rng.uniform(0.7, 1.4);
    }
    for (double cap : {0.0, 80.0, 120.0}) worst = std::max(worst, metrics_gap(evaluate(pred, gt, cap), naive(pred, gt, cap)));
  }
  o.check(worst <= 1e-12, fmt::format("vectorized vs naive gap {:.2e}", worst));

  MetricsReport e;
  e.n_valid = 3;
  e.delta1 = e.delta2 = e.delta3 = 1.0;
  double ex = metrics_gap(evaluate(row({1, 2, 4}), row({1, 2, 4}), 0.0), e);
  e = {};
  e.n_valid = 1;
  e.abs_rel = 1.0;
  e.rmse = 1.0;
  e.rmse_log = std::numbers::ln2;
  e.log10 = std::log10(2.0);
  ex = std::max(ex, metrics_gap(evaluate(row({2}), row({1}), 0.0), e));
  e = {};
  e.n_valid = 2;
  e.delta1 = 0.5;
  e.delta2 = 0.5;
  e.delta3 = 0.5;
  e.abs_rel = 0.5;
  e.rmse = std::sqrt(0.5);
  e.rmse_log = std::sqrt(0.5) * std::numbers::ln2;
  e.log10 = 0.5 * std::log10(2.0);
  ex = std::max(ex, metrics_gap(evaluate(row({2, 4}), row({1, 4}), 0.0), e));
  o.check(ex <= 1e-9, fmt::format("worked examples off by {:.2e}", ex));
  if (o.pass) o.detail = fmt::format("50 pairs max gap {:.2e}, examples {:.2e}", worst, ex);
  return o;
}

// ------------------------------------------------------------------ 5

LidarSensor colocated(const std::string& name, const RigidTransform& cam, double yaw_deg) {
  LidarSensor s;
  s.name = name;
  s.pose = compose(cam, RigidTransform::from_axis_angle(Vector3d::UnitY(), yaw_deg * std::numbers::pi / 180.0,
                                                        Vector3d::Zero(), name, kCameraFrame));
  s.n_lines = 16;
  s.azimuth_step_deg = 0.7;
  return s;
}

Outcome geometry() {
  Outcome o;
  SplitMix64 rng(5);
  double canon = 0.0;
  for (int i = 0; i < 100; ++i) {
    const CanonicalSpace space = mean_focal(std::vector<double>{rng.uniform(300, 1000), rng.uniform(300, 1000)});
    const double f_gt = rng.uniform(300, 1000);
    const DepthMap d = random_depth(32, 24, rng, 0.7, 0.5, 120.0);
    const DepthMap back = from_canonical(to_canonical(d, f_gt, space), f_gt, space);
    for (std::size_t k = 0; k < d.size(); ++k) {
      canon = std::max(canon, std::abs(back.values[k] - d.values[k]));
      if (d.values[k] == 0.0 && back.values[k] != 0.0) canon = 1e300;
    }
  }
  o.check(canon < 1e-12, fmt::format("canonical round trip {:.2e}", canon));

  const CameraIntrinsics K{100, 100, 63.5, 47.5, 128, 96};
  PointCloud cloud{{}, kCameraFrame};
  for (int i = 0; i < 2000; ++i) {
    const double z = rng.uniform(1.0, 79.0);
    cloud.points.emplace_back(rng.uniform(-0.6, 0.6) * z, rng.uniform(-0.45, 0.45) * z, z);
  }
  const Projection p = project_indexed(cloud, K, 0.5, 80.0);
  double relift = 0.0;  // error in units of the half-pixel bound
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const long src = p.source[static_cast<std::size_t>(v) * K.width + u];
      if (src < 0) continue;
      const Vector3d& x = cloud.points[static_cast<std::size_t>(src)];
      const Vector3d lifted = K.unproject(u, v) * p.depth.at(u, v);
      relift = std::max({relift, std::abs(lifted.x() - x.x()) / (0.5 * x.z() / K.fx),
                         std::abs(lifted.y() - x.y()) / (0.5 * x.z() / K.fy)});
    }
  }
  o.check(relift <= 1.0 + 1e-9, fmt::format("re-lift at {:.3f} of the quantization bound", relift));

  double cross = 0.0;
  int checked = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    SceneSpec spec;
    spec.seed = seed;
    const RigidTransform cam = spec.camera_pose;
    const std::vector<LidarSensor> sensors = {colocated("lidar_left", cam, -30.0), colocated("lidar_center", cam, 0.0),
                                              colocated("lidar_right", cam, 30.0)};
    const Scene scene = build_scene(spec);
    std::vector<RigidTransform> ext;
    for (const auto& s : sensors) ext.push_back(sensor_to_camera(s, cam));
    const PointCloud merged = merge(simulate_lidar(scene, sensors), ext);
    const Projection q = project_indexed(merged, K, 0.5, 80.0);
    for (long src : q.source) {
      if (src < 0) continue;
      const Vector3d& x = merged.points[static_cast<std::size_t>(src)];
      const Eigen::Vector2d uv = K.project(x);
      cross = std::max(cross, std::abs(depth_at(scene, K, cam, uv.x(), uv.y()) - x.z()));
      ++checked;
    }
  }
  o.check(checked > 0, "no LiDAR returns in view");
  o.check(cross < 1e-6, fmt::format("LiDAR vs render {:.2e} m", cross));
  if (o.pass) {
    o.detail = fmt::format("canonical {:.2e}, re-lift {:.3f} of bound, LiDAR vs render {:.2e} m over {} returns", canon,
                           relift, cross, checked);
  }
  return o;
}

// ------------------------------------------------------------------ 6

Outcome stereo_recovery() {
  Outcome o;
  SceneSpec spec;
  spec.include_trees = false;
  spec.include_posts = false;
  spec.include_ground = false;
  spec.walls = {Wall{Vector3d(0.0, 0.0, 20.0), Vector3d::UnitZ()}};
  const CameraIntrinsics K{700, 700, 63.5, 47.5, 128, 96};
  const StereoRig rig{K, 0.5, 64, 3};
  const auto t0 = Clock::now();
  const auto [left, right] = stereo_pair(spec, K, spec.camera_pose, rig.baseline);
  const DepthMap depth = disparity_to_depth(match(left, right, rig), rig, 120.0);
  const double secs = seconds_since(t0);
  int valid = 0, good = 0;
  for (int v = rig.block_radius; v < K.height - rig.block_radius; ++v) {
    for (int u = rig.max_disparity + rig.block_radius; u < K.width - rig.block_radius; ++u) {
      if (depth.at(u, v) <= 0.0) continue;
      ++valid;
      good += std::abs(depth.at(u, v) - 20.0) <= 0.02 * 20.0;
    }
  }
  const double frac = valid ? static_cast<double>(good) / valid : 0.0;
  o.check(valid > 0, "no valid interior pixels");
  o.check(frac >= 0.95, fmt::format("{:.1f}% within 2%", 100.0 * frac));
  o.check(secs < 30.0, fmt::format("took {:.1f} s", secs));

  // fl(fB / z) is not injective: a few doubles share their disparity with a
  // neighbour, and no inverse can tell them apart. Those must come back as
  // the other preimage; every other depth must come back bit-exact.
  int exact = 0, shared = 0, total = 0;
  for (double z = 0.5; z <= 120.0; z += 0.25) {
    DisparityMap d(1, 1);
    d.values[0] = rig.K.fx * rig.baseline / z;
    const double back = disparity_to_depth(d, rig, 1e9).values[0];
    ++total;
    if (back == z) {
      ++exact;
    } else if (rig.K.fx * rig.baseline / back == d.values[0]) {
      ++shared;
    }
  }
  o.check(exact + shared == total, fmt::format("round trip lost {} of {} depths", total - exact - shared, total));
  if (o.pass) {
    o.detail = fmt::format("{:.1f}% of {} interior pixels within 2%, {:.2f} s, round trip bit-exact on {} of {} depths, "
                           "{} share their disparity with another double",
                           100.0 * frac, valid, secs, exact, total, shared);
  }
  return o;
}

// ------------------------------------------------------------------ 7

Outcome table1_direction() {
  Outcome o;
  const auto t0 = Clock::now();
  std::string rows;
  for (std::uint64_t seed : {1, 2, 3}) {
    AbConfig c;
    c.seed = seed;
    const AbCorpus corpus = make_ab_corpus(c);
    o.check(corpus.total_samples() >= 200, "corpus smaller than 200 samples");
    const AbResult r = run_ab(c, corpus);
    std::string line = fmt::format("seed {}:", seed);
    for (const auto& row : r.rows) {
      const double off = row.mask == "dense" ? row.off.rmse : row.off.delta1;
      const double on = row.mask == "dense" ? row.on.rmse : row.on.delta1;
      line += fmt::format(" {}/{} {} {:.3f} -> {:.3f} ({:+.1f}%)", row.split, row.mask,
                          row.mask == "dense" ? "RMSE" : "d1", off, on, 100.0 * (on - off) / off);
    }
    std::printf("  %s\n", line.c_str());
    std::fflush(stdout);
    rows += (rows.empty() ? "" : "; ") + line;
    o.check(r.dense_rmse_ok(), fmt::format("seed {} dense RMSE gain below {:.0f}%", seed, 100 * kAbDenseRmseGain));
    o.check(r.sparse_delta1_ok(), fmt::format("seed {} sparse d1 moved more than {:.0f}%", seed, 100 * kAbSparseDelta1Tolerance));
  }
  const double secs = seconds_since(t0);
  o.check(secs < 900.0, fmt::format("took {:.0f} s", secs));
  if (o.pass) o.detail = fmt::format("3 seeds in {:.0f} s", secs);
  return o;
}

// ------------------------------------------------------------------ 8

Outcome recipe_fidelity() {
  Outcome o;
  DatasetSpec sparse = orchard_preset(48, 48, 45.0);
  sparse.count = 8;
  DatasetSpec dense = stereo_preset(48, 48, 55.0);
  dense.count = 8;
  dense.seed = 2;
  const Dataset ds = generate_dataset(sparse), dd = generate_dataset(dense);

  TrainConfig c = AbConfig::desk_train_config();
  c.epochs = 6;
  c.t_max = 6;
  c.crop = 40;
  c.batch_size = 3;
  c.seed = 8;
  // A large learning rate pushes the loss weights into their clamps.
  c.lr = 0.2;
  TrainConfig c_iter = c;
  c_iter.schedule_per_iteration = true;

  double lr_gap = 0.0, post_clip = 0.0;
  int clipped = 0, steps = 0, at_bound = 0;
  bool bounds = true;
  for (const TrainConfig* cfg : {&c, &c_iter}) {
    const TrainResult r = fit(&dd, &ds, *cfg);
    long per_epoch = 0;
    for (const auto& s : r.steps) per_epoch += s.epoch == 0;
    long index = 0;
    int epoch = -1;
    for (const auto& s : r.steps) {
      if (s.epoch != epoch) {
        epoch = s.epoch;
        index = 0;
      }
      const double t = cfg->schedule_per_iteration ? s.epoch + static_cast<double>(index) / per_epoch : s.epoch;
      const double closed =
          cfg->eta_min + (cfg->lr - cfg->eta_min) / 2.0 * (1.0 + std::cos(std::numbers::pi * t / cfg->t_max));
      lr_gap = std::max(lr_gap, std::abs(s.lr - closed));
      ++index;
      if (s.skipped) continue;
      ++steps;
      post_clip = std::max(post_clip, s.clipped_norm);
      clipped += s.grad_norm > cfg->max_grad_norm;
      bounds = bounds && s.weights.within_bounds();
      const LossWeights& w = s.weights;
      at_bound += w.alpha == LossWeights::kMin || w.alpha == LossWeights::kAlphaBetaMax || w.beta == LossWeights::kMin ||
                  w.beta == LossWeights::kAlphaBetaMax || w.gamma == LossWeights::kMin ||
                  w.gamma == LossWeights::kGammaMax;
    }
  }
  o.check(lr_gap <= 1e-15, fmt::format("lr off the closed form by {:.2e}", lr_gap));
  o.check(post_clip <= 1.0 + 1e-12, fmt::format("post-clip norm {:.17g}", post_clip));
  o.check(clipped > 0, "clipping never engaged");
  o.check(bounds, "loss-weight clamp violated");

  TrainConfig rerun = c;
  rerun.epochs = 3;
  const TrainResult a = fit(&dd, &ds, rerun), b = fit(&dd, &ds, rerun);
  bool same_steps = a.steps.size() == b.steps.size();
  for (std::size_t i = 0; same_steps && i < a.steps.size(); ++i) same_steps = format_step(a.steps[i]) == format_step(b.steps[i]);
  o.check(a.state == b.state && same_steps, "rerun not bit-exact");
  if (o.pass) {
    o.detail = fmt::format("{} steps, lr gap {:.1e}, {} clipped, max post-clip {:.15f}, {} steps with a weight at its clamp, rerun bit-exact",
                           steps, lr_gap, clipped, post_clip, at_bound);
  }
  return o;
}

}  // namespace
}  // namespace mcdepth

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  using namespace mcdepth;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradients},
      {"SiLog algebra", silog_algebra},
      {"consistency loss", consistency_loss},
      {"metrics oracle equivalence", metrics_oracle},
      {"geometry round trips", geometry},
      {"stereo recovery", stereo_recovery},
      {"consistency on/off direction", table1_direction},
      {"recipe fidelity", recipe_fidelity},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(n)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    failures += !o.pass;
    std::printf("criterion %d: %s %s (%s) [%.1f s]\n", n, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
