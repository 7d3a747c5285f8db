// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mcdepth/config.hpp"
#include "mcdepth/geom.hpp"
#include "mcdepth/raster.hpp"
#include "mcdepth/simdata.hpp"

namespace mcdepth {

enum class DatasetTag { kSparseOnly, kDenseAndSparse };

const char* to_string(DatasetTag tag);
DatasetTag parse_dataset_tag(const std::string& text);

/// One training/validation unit. `dense` is present iff tag is kDenseAndSparse.
struct SampleRecord {
  Image image;
  DepthMap sparse;
  std::optional<DepthMap> dense;
  CameraIntrinsics intrinsics;
  DatasetTag tag = DatasetTag::kSparseOnly;
  /// Exact rendered depth; simulator output only, never written by `gen`.
  std::optional<DepthMap> exact;

  void validate() const;
};

struct Dataset {
  std::string name;
  DatasetTag tag = DatasetTag::kSparseOnly;
  CameraIntrinsics intrinsics;
  std::vector<SampleRecord> samples;
};

enum class DenseSource { kStereo, kRender };

/// Recipe for a synthetic split. LiDAR mounts give each sensor's pose in
/// the camera frame (sensor -> cam).
struct DatasetSpec {
  std::string name = "orchard";
  DatasetTag tag = DatasetTag::kSparseOnly;
  int count = 8;
  std::uint64_t seed = 1;
  CameraIntrinsics intrinsics{100.0, 100.0, 63.5, 47.5, 128, 96};
  SceneSpec scene;
  std::vector<LidarSensor> lidars;
  double z_min = 0.5;
  double sparse_cap = 80.0;
  double dense_cap = 120.0;
  DenseSource dense_source = DenseSource::kStereo;
  double baseline = 0.5;
  int max_disparity = 64;
  int block_radius = 3;
  double left_right_tolerance = 1.0;
  /// Stereo is matched on a pair rendered this many times larger (focal and
  /// disparity range scale with it); each sample pixel then takes the depth
  /// of the high-resolution pixel nearest its centre.
  int stereo_supersample = 1;
  double camera_height = 1.5;
  double height_jitter = 0.2;
  double lateral_jitter = 0.5;
  double yaw_jitter_deg = 8.0;
  double pitch_jitter_deg = 3.0;

  void validate() const;
  KeyValues to_kv() const;
  static DatasetSpec from_kv(const KeyValues& kv);
};

/// Three side-by-side 32-line sensors on a bar above the camera; the outer
/// ones are yawed outward, which produces occluded returns in the camera view.
std::vector<LidarSensor> orchard_lidar_rig();
/// A single 32-line sensor just above the camera.
std::vector<LidarSensor> single_lidar_rig();

/// Sparse-only orchard split (LiDAR labels only).
DatasetSpec orchard_preset(int width, int height, double focal);
/// Dense-and-sparse split (stereo dense plus LiDAR labels).
DatasetSpec stereo_preset(int width, int height, double focal);

/// Deterministic in (spec, index). Images are quantized to 8 bits and depth
/// to float32 so a sample reloaded from disk is identical.
SampleRecord generate_sample(const DatasetSpec& spec, int index);
Dataset generate_dataset(const DatasetSpec& spec);

/// Writes NNNN.ppm, NNNN.sparse.pfm, NNNN.dense.pfm (dense samples),
/// calib.txt and manifest.txt. `manifest_header` lines are prepended.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                   const std::string& manifest_header = {});
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace mcdepth
