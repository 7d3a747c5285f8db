// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mcdepth/geom.hpp"
#include "mcdepth/raster.hpp"

namespace mcdepth {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::string frame;
};

/// Transforms each cloud into the common target frame and concatenates.
/// extrinsics[i] must map clouds[i].frame into a frame shared by all.
PointCloud merge(std::span<const PointCloud> clouds, std::span<const RigidTransform> extrinsics);

inline constexpr double kDefaultZMin = 0.5;
inline constexpr double kDefaultSparseCap = 80.0;

struct Projection {
  DepthMap depth;
  /// Index of the point that won each pixel's z-buffer, -1 where empty.
  std::vector<long> source;
};

/// Nearest-pixel projection with a min-depth z-buffer. Points behind
/// z_min, beyond z_max, or outside the image are dropped.
Projection project_indexed(const PointCloud& cloud, const CameraIntrinsics& K, double z_min,
                           double z_max);
DepthMap project(const PointCloud& cloud, const CameraIntrinsics& K,
                 double z_min = kDefaultZMin, double z_max = kDefaultSparseCap);

/// Text format: header `n_points frame`, then `x y z` per line.
std::string format_cloud(const PointCloud& cloud);
PointCloud parse_cloud(const std::string& text);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_cloud(const std::filesystem::path& path);

}  // namespace mcdepth
