// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mcdepth/cloud.hpp"
#include "mcdepth/geom.hpp"
#include "mcdepth/raster.hpp"

namespace mcdepth {

// World frame: y up, ground plane y = 0, tree rows run along +z.
// Camera and LiDAR frames: x right, y down, z forward.

enum class Material { kGround, kTrunk, kPost, kCanopy, kWall };

/// Infinite textured plane, world frame.
struct Wall {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

/// Procedural orchard description. Same spec, same scene, bit for bit.
struct SceneSpec {
  std::uint64_t seed = 1;
  int rows = 4;
  double row_spacing = 3.5;
  double trunk_spacing = 1.6;
  double trunk_radius = 0.12;
  double trunk_height = 1.3;
  double canopy_radius = 0.9;
  double row_start = 2.5;
  double row_length = 40.0;
  /// Relative jitter applied to tree placement and size.
  double jitter = 0.25;
  bool include_trees = true;
  bool include_posts = true;
  int post_every = 5;
  double post_radius = 0.06;
  double post_height = 2.4;
  bool include_ground = true;
  std::vector<Wall> walls;
  /// Maps the camera frame into the world frame.
  RigidTransform camera_pose = default_camera_pose(1.5);
  /// World-space size of the finest albedo noise cell, meters.
  double texture_cell = 0.08;

  void validate() const;
  /// Camera at (lateral, height, 0) looking down +z, with optional yaw/pitch
  /// in radians (positive yaw turns toward world -x, i.e. camera right).
  static RigidTransform default_camera_pose(double height, double lateral = 0.0,
                                            double yaw = 0.0, double pitch = 0.0);
};

struct Cylinder {
  double x = 0.0;
  double z = 0.0;
  double radius = 0.0;
  double height = 0.0;
  Material material = Material::kTrunk;
};

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

struct Scene {
  bool ground = true;
  std::vector<Cylinder> cylinders;
  std::vector<Sphere> spheres;
  std::vector<Wall> walls;
  std::uint64_t texture_seed = 0;
  double texture_cell = 0.08;
};

Scene build_scene(const SceneSpec& spec);

struct Hit {
  double t = 0.0;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  Material material = Material::kGround;
};

/// Nearest intersection with t > 1e-9 along origin + t * dir (world frame).
std::optional<Hit> cast_ray(const Scene& scene, const Eigen::Vector3d& origin,
                            const Eigen::Vector3d& dir);

/// Camera-frame z of the surface seen through continuous pixel position
/// (u, v); 0 for sky.
double depth_at(const Scene& scene, const CameraIntrinsics& K, const RigidTransform& pose,
                double u, double v);

struct Render {
  Image image;
  DepthMap depth;  // dense, exact
};

/// One ray per pixel centre; Lambert-shaded albedo with world-space noise.
Render render(const Scene& scene, const CameraIntrinsics& K, const RigidTransform& pose);
Render render(const SceneSpec& spec, const CameraIntrinsics& K, const RigidTransform& pose);

struct LidarSensor {
  std::string name = "lidar";
  /// Maps the sensor frame into the world frame.
  RigidTransform pose;
  int n_lines = 32;
  double azimuth_step_deg = 1.0;
  double elevation_min_deg = -24.0;
  double elevation_max_deg = 2.0;
  double azimuth_min_deg = -60.0;
  double azimuth_max_deg = 60.0;
  double max_range = 120.0;
};

/// Returns one cloud per sensor, points in that sensor's frame (frame label =
/// sensor name). Misses are omitted.
std::vector<PointCloud> simulate_lidar(const Scene& scene, std::span<const LidarSensor> sensors);
std::vector<PointCloud> simulate_lidar(const SceneSpec& spec, std::span<const LidarSensor> sensors);

/// Sensor-to-camera extrinsic for a sensor and camera both posed in the world.
RigidTransform sensor_to_camera(const LidarSensor& sensor, const RigidTransform& camera_pose);

/// Left and right renders with the camera shifted by -B/2 and +B/2 along its
/// own x axis. Rectified by construction.
std::pair<Image, Image> stereo_pair(const Scene& scene, const CameraIntrinsics& K,
                                    const RigidTransform& pose, double baseline);
std::pair<Image, Image> stereo_pair(const SceneSpec& spec, const CameraIntrinsics& K,
                                    const RigidTransform& pose, double baseline);

/// Shifts a camera pose along its own x axis.
RigidTransform shift_along_x(const RigidTransform& pose, double dx);

}  // namespace mcdepth
