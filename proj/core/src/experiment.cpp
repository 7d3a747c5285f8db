// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mcdepth/error.hpp"
#include "mcdepth/rng.hpp"

namespace mcdepth {

TrainConfig AbConfig::desk_train_config() {
  TrainConfig t;
  t.lr = 1e-3;
  t.eta_min = 1e-6;
  t.batch_size = 4;
  t.crop = 48;
  t.epochs = 28;
  t.t_max = 28;
  return t;
}

void AbConfig::validate() const {
  if (image_size <= 0 || image_size % 8 != 0) fail(ErrorKind::kConfig, "ab: image_size must be a positive multiple of 8");
  if (train_per_split <= 0 || val_per_split <= 0) fail(ErrorKind::kConfig, "ab: split sizes must be positive");
  if (!(focal_sparse > 0.0 && focal_dense > 0.0)) fail(ErrorKind::kConfig, "ab: focal lengths must be positive");
  if (lidar_lines < 2 || !(lidar_azimuth_step_deg > 0.0)) fail(ErrorKind::kConfig, "ab: bad lidar sampling");
  if (max_disparity <= 0 || max_disparity >= image_size) fail(ErrorKind::kConfig, "ab: max_disparity out of range");
  if (stereo_supersample < 1) fail(ErrorKind::kConfig, "ab: stereo_supersample must be >= 1");
  train.validate();
}

KeyValues AbConfig::to_kv() const {
  KeyValues kv = train.to_kv();
  kv.set("seed", seed);
  kv.set("image_size", image_size);
  kv.set("train_per_split", train_per_split);
  kv.set("val_per_split", val_per_split);
  kv.set("focal_sparse", focal_sparse);
  kv.set("focal_dense", focal_dense);
  kv.set("lidar_lines", lidar_lines);
  kv.set("lidar_azimuth_step_deg", lidar_azimuth_step_deg);
  kv.set("max_disparity", max_disparity);
  kv.set("stereo_supersample", stereo_supersample);
  return kv;
}

AbConfig AbConfig::from_kv(const KeyValues& kv) {
  AbConfig c;
  KeyValues train_kv = c.train.to_kv();
  for (const auto& [k, v] : kv.entries()) {
    if (k == "image_size" || k == "train_per_split" || k == "val_per_split" || k == "focal_sparse" ||
        k == "focal_dense" || k == "lidar_lines" || k == "lidar_azimuth_step_deg" || k == "max_disparity" ||
        k == "stereo_supersample") {
      continue;
    }
    train_kv.set(k, v);
  }
  c.train = TrainConfig::from_kv(train_kv);
  c.seed = c.train.seed;
  c.image_size = static_cast<int>(kv.get_int("image_size", c.image_size));
  c.train_per_split = static_cast<int>(kv.get_int("train_per_split", c.train_per_split));
  c.val_per_split = static_cast<int>(kv.get_int("val_per_split", c.val_per_split));
  c.focal_sparse = kv.get_double("focal_sparse", c.focal_sparse);
  c.focal_dense = kv.get_double("focal_dense", c.focal_dense);
  c.lidar_lines = static_cast<int>(kv.get_int("lidar_lines", c.lidar_lines));
  c.lidar_azimuth_step_deg = kv.get_double("lidar_azimuth_step_deg", c.lidar_azimuth_step_deg);
  c.max_disparity = static_cast<int>(kv.get_int("max_disparity", c.max_disparity));
  c.stereo_supersample = static_cast<int>(kv.get_int("stereo_supersample", c.stereo_supersample));
  c.validate();
  return c;
}

std::size_t AbCorpus::total_samples() const {
  return sparse_train.samples.size() + sparse_val.samples.size() + dense_train.samples.size() +
         dense_val.samples.size();
}

namespace {

Dataset slice(const Dataset& all, std::size_t begin, std::size_t end) {
  Dataset d{all.name, all.tag, all.intrinsics, {}};
  d.samples.assign(all.samples.begin() + static_cast<long>(begin), all.samples.begin() + static_cast<long>(end));
  return d;
}

}  // namespace

AbCorpus make_ab_corpus(const AbConfig& config) {
  config.validate();
  const SplitMix64 root = SplitMix64(config.seed).split("ab-corpus");
  const int n = config.train_per_split + config.val_per_split;
  const auto size = static_cast<std::size_t>(config.train_per_split);

  DatasetSpec sparse = orchard_preset(config.image_size, config.image_size, config.focal_sparse);
  sparse.count = n;
  sparse.seed = root.split("sparse").next();
  DatasetSpec dense = stereo_preset(config.image_size, config.image_size, config.focal_dense);
  dense.count = n;
  dense.seed = root.split("dense").next();

  dense.max_disparity = config.max_disparity;
  dense.stereo_supersample = config.stereo_supersample;
  for (DatasetSpec* spec : {&sparse, &dense}) {
    for (auto& l : spec->lidars) {
      l.n_lines = config.lidar_lines;
      l.azimuth_step_deg = config.lidar_azimuth_step_deg;
    }
  }

  const Dataset s = generate_dataset(sparse);
  const Dataset d = generate_dataset(dense);
  AbCorpus c;
  c.sparse_train = slice(s, 0, size);
  c.sparse_val = slice(s, size, s.samples.size());
  c.dense_train = slice(d, 0, size);
  c.dense_val = slice(d, size, d.samples.size());
  return c;
}

bool AbResult::dense_rmse_ok() const {
  bool any = false;
  for (const auto& r : rows) {
    if (r.mask != "dense") continue;
    any = true;
    if (!(r.on.rmse <= (1.0 - kAbDenseRmseGain) * r.off.rmse)) return false;
  }
  return any;
}

bool AbResult::sparse_delta1_ok() const {
  bool any = false;
  for (const auto& r : rows) {
    if (r.mask != "sparse") continue;
    any = true;
    if (!(std::abs(r.on.delta1 - r.off.delta1) <= kAbSparseDelta1Tolerance * r.off.delta1)) return false;
  }
  return any;
}

AbResult run_ab(const AbConfig& config, const AbCorpus& corpus) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  FitOptions options;
  options.validation = {{"dense_split", &corpus.dense_val}, {"sparse_split", &corpus.sparse_val}};

  TrainConfig off = config.train;
  off.seed = config.seed;
  off.mode = LossMode::kSilog;
  TrainConfig on = off;
  on.mode = LossMode::kConsistency;

  spdlog::info("ab: training consistency-off");
  const TrainResult r_off = fit(&corpus.dense_train, &corpus.sparse_train, off, options);
  spdlog::info("ab: training consistency-on");
  const TrainResult r_on = fit(&corpus.dense_train, &corpus.sparse_train, on, options);

  AbResult result;
  result.off_epochs = r_off.epochs;
  result.on_epochs = r_on.epochs;
  result.on_weights = r_on.state.weights;
  const auto& v_off = r_off.epochs.back().validation;
  const auto& v_on = r_on.epochs.back().validation;
  for (std::size_t i = 0; i < v_off.size(); ++i) {
    result.rows.push_back({v_off[i].split, v_off[i].mask, v_off[i].metrics, v_on[i].metrics});
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string format_ab_table(const AbResult& result) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-20s %-16s %8s %8s %8s %8s %9s %9s %8s %8s\n", "validation", "loss", "delta1",
                "delta2", "delta3", "abs_rel", "rmse", "rmse_log", "log10", "n_valid");
  out << line;
  for (const auto& r : result.rows) {
    const std::string name = r.split + "/" + r.mask;
    for (int k = 0; k < 2; ++k) {
      const MetricsReport& m = k == 0 ? r.off : r.on;
      std::snprintf(line, sizeof(line), "%-20s %-16s %8.4f %8.4f %8.4f %8.4f %9.4f %9.4f %8.4f %8zu\n",
                    name.c_str(), k == 0 ? "SiLog" : "ConsistencyLoss", m.delta1, m.delta2, m.delta3, m.abs_rel,
                    m.rmse, m.rmse_log, m.log10, m.n_valid);
      out << line;
    }
  }
  std::snprintf(line, sizeof(line), "dense_rmse_gain %s  sparse_delta1 %s  (%.1f s)\n",
                result.dense_rmse_ok() ? "PASS" : "FAIL", result.sparse_delta1_ok() ? "PASS" : "FAIL",
                result.seconds);
  out << line;
  return out.str();
}

}  // namespace mcdepth
