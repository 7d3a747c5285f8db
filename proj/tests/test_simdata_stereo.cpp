// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mcdepth/cloud.hpp"
#include "mcdepth/error.hpp"
#include "mcdepth/raster.hpp"
#include "mcdepth/simdata.hpp"
#include "mcdepth/stereo.hpp"
#include "test_util.hpp"

namespace mcdepth {
namespace {

using Eigen::Vector3d;

constexpr double kDeg = std::numbers::pi / 180.0;

LidarSensor colocated_sensor(const std::string& name, const RigidTransform& camera_pose, double yaw_deg) {
  const RigidTransform mount =
      RigidTransform::from_axis_angle(Vector3d::UnitY(), yaw_deg * kDeg, Vector3d::Zero(), name, kCameraFrame);
  LidarSensor s;
  s.name = name;
  s.pose = compose(camera_pose, mount);
  s.n_lines = 16;
  s.azimuth_step_deg = 0.7;
  return s;
}

SceneSpec wall_only(double z) {
  SceneSpec spec;
  spec.include_trees = false;
  spec.include_posts = false;
  spec.include_ground = false;
  spec.walls = {Wall{Vector3d(0.0, 0.0, z), Vector3d::UnitZ()}};
  return spec;
}

TEST(Render, TrunkFaceOnOpticalAxis) {
  Scene scene;
  scene.ground = false;
  scene.cylinders = {Cylinder{0.0, 10.0, 0.2, 3.0, Material::kTrunk}};
  const CameraIntrinsics K{100, 100, 63.5, 47.5, 128, 96};
  const RigidTransform pose = SceneSpec::default_camera_pose(1.5);
  // Closed form: the axis ray meets the cylinder at z = 10 - r.
  EXPECT_NEAR(depth_at(scene, K, pose, K.cx, K.cy), 9.8, 1e-12);
}

TEST(Render, GroundMatchesRayPlaneClosedForm) {
  Scene scene;
  scene.ground = true;
  const double h = 1.7, f = 100.0;
  const CameraIntrinsics K{f, f, 63.5, 47.5, 128, 96};
  const RigidTransform pose = SceneSpec::default_camera_pose(h);
  for (double v : {60.0, 70.5, 95.0}) {
    for (double u : {0.0, 63.5, 127.0}) {
      // Level camera, y down: the ray descends (v - cy) / f per unit z.
      EXPECT_NEAR(depth_at(scene, K, pose, u, v), h * f / (v - K.cy), 1e-9) << u << "," << v;
    }
  }
  EXPECT_EQ(depth_at(scene, K, pose, 63.5, 20.0), 0.0);
}

TEST(Render, SameSeedIsBitIdentical) {
  SceneSpec spec;
  spec.seed = 77;
  const CameraIntrinsics K{50, 50, 31.5, 23.5, 64, 48};
  const Render a = render(spec, K, spec.camera_pose);
  const Render b = render(spec, K, spec.camera_pose);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.depth, b.depth);
  spec.seed = 78;
  EXPECT_NE(render(spec, K, spec.camera_pose).image, a.image);
}

TEST(Lidar, WallRanges) {
  Scene scene;
  scene.ground = false;
  scene.walls = {Wall{Vector3d(0, 0, 10), Vector3d::UnitZ()}};
  LidarSensor s;
  s.name = "lidar";
  s.pose = SceneSpec::default_camera_pose(0.0);
  s.n_lines = 3;
  s.elevation_min_deg = -2.0;
  s.elevation_max_deg = 2.0;
  const auto clouds = simulate_lidar(scene, std::vector<LidarSensor>{s});
  ASSERT_EQ(clouds.size(), 1u);
  EXPECT_EQ(clouds[0].frame, "lidar");
  int horizontal = 0;
  for (const Vector3d& p : clouds[0].points) {
    EXPECT_GE(p.norm(), 10.0 - 1e-9);
    if (std::abs(p.x()) < 1e-9 && std::abs(p.y()) < 1e-9) {
      EXPECT_NEAR(p.z(), 10.0, 1e-12);
      ++horizontal;
    }
  }
  EXPECT_EQ(horizontal, 1);
}

TEST(Lidar, EmptySceneGivesEmptyCloud) {
  Scene scene;
  scene.ground = false;
  LidarSensor s;
  s.pose = SceneSpec::default_camera_pose(1.5);
  const auto clouds = simulate_lidar(scene, std::vector<LidarSensor>{s});
  ASSERT_EQ(clouds.size(), 1u);
  EXPECT_TRUE(clouds[0].points.empty());
}

// Sensors sharing the camera centre see exactly what the camera sees, so
// every projected return must agree with a camera ray cast through the
// point's exact image position.
TEST(Lidar, MergedCloudAgreesWithRender) {
  SceneSpec spec;
  spec.seed = 5;
  const CameraIntrinsics K{100, 100, 63.5, 47.5, 128, 96};
  const RigidTransform cam = spec.camera_pose;
  const std::vector<LidarSensor> sensors = {colocated_sensor("lidar_left", cam, -30.0),
                                            colocated_sensor("lidar_center", cam, 0.0),
                                            colocated_sensor("lidar_right", cam, 30.0)};
  const Scene scene = build_scene(spec);
  const auto clouds = simulate_lidar(scene, sensors);
  std::vector<RigidTransform> extrinsics;
  for (const auto& s : sensors) extrinsics.push_back(sensor_to_camera(s, cam));
  const PointCloud merged = merge(clouds, extrinsics);
  const Projection p = project_indexed(merged, K, 0.5, 80.0);

  int checked = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.source.size(); ++i) {
    if (p.source[i] < 0) continue;
    const Vector3d& x = merged.points[static_cast<std::size_t>(p.source[i])];
    const Eigen::Vector2d uv = K.project(x);
    worst = std::max(worst, std::abs(depth_at(scene, K, cam, uv.x(), uv.y()) - x.z()));
    ++checked;
  }
  EXPECT_GT(checked, 500);
  EXPECT_LT(worst, 1e-6);
}

TEST(Lidar, FrontalWallAgreesOnPixelGrid) {
  const SceneSpec spec = wall_only(12.0);
  const CameraIntrinsics K{100, 100, 63.5, 47.5, 128, 96};
  const LidarSensor s = colocated_sensor("lidar", spec.camera_pose, 0.0);
  const auto clouds = simulate_lidar(spec, std::vector<LidarSensor>{s});
  const DepthMap sparse =
      project(merge(clouds, std::vector<RigidTransform>{sensor_to_camera(s, spec.camera_pose)}), K);
  const Render r = render(spec, K, spec.camera_pose);
  ASSERT_GT(sparse.count_valid(), 100u);
  for (std::size_t i = 0; i < sparse.size(); ++i) {
    if (sparse.values[i] > 0.0) EXPECT_NEAR(sparse.values[i], r.depth.values[i], 1e-6);
  }
}

TEST(StereoPair, ZeroBaselineGivesIdenticalImages) {
  SceneSpec spec;
  const CameraIntrinsics K{50, 50, 31.5, 23.5, 64, 48};
  const auto [left, right] = stereo_pair(spec, K, spec.camera_pose, 0.0);
  EXPECT_EQ(left, right);
}

TEST(Stereo, IdenticalImagesHaveNoValidDisparity) {
  SplitMix64 r(1);
  const Image img = testing::random_image(48, 32, r);
  StereoRig rig{{50, 50, 23.5, 15.5, 48, 32}, 0.5, 16, 2};
  const DisparityMap d = match(img, img, rig);
  for (double v : d.values) EXPECT_LE(v, 0.0);
}

TEST(Stereo, PureTranslationRecoversShift) {
  SplitMix64 r(2);
  const int w = 64, h = 32, shift = 7;
  const Image left = testing::random_image(w, h, r);
  Image right(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      for (int c = 0; c < 3; ++c) right.at(u, v, c) = u + shift < w ? left.at(u + shift, v, c) : 0.0;
    }
  }
  StereoRig rig{{50, 50, 31.5, 15.5, w, h}, 0.5, 16, 2};
  // The parabola through SAD costs is not symmetric on random texture, so
  // sub-pixel refinement moves the integer optimum by less than half a pixel.
  const DisparityMap refined = match(left, right, rig);
  rig.subpixel = false;
  const DisparityMap d = match(left, right, rig);
  for (int v = rig.block_radius; v < h - rig.block_radius; ++v) {
    for (int u = rig.max_disparity + rig.block_radius; u < w - rig.block_radius - shift; ++u) {
      EXPECT_EQ(d.at(u, v), shift) << u << "," << v;
      EXPECT_LT(std::abs(refined.at(u, v) - shift), 0.5) << u << "," << v;
    }
  }
}

TEST(Stereo, InvariantToIntensityOffset) {
  SplitMix64 r(3);
  const Image left = testing::random_image(40, 24, r);
  const Image right = testing::random_image(40, 24, r);
  Image left2 = left, right2 = right;
  for (double& x : left2.rgb) x += 0.25;
  for (double& x : right2.rgb) x += 0.25;
  StereoRig rig{{40, 40, 19.5, 11.5, 40, 24}, 0.5, 8, 2};
  const DisparityMap a = match(left, right, rig), b = match(left2, right2, rig);
  ASSERT_EQ(a.values.size(), b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
}

TEST(Stereo, FrontalPlaneDisparity) {
  const SceneSpec spec = wall_only(20.0);
  const CameraIntrinsics K{700, 700, 63.5, 47.5, 128, 96};
  const auto [left, right] = stereo_pair(spec, K, spec.camera_pose, 0.5);
  StereoRig rig{K, 0.5, 64, 3};
  const DisparityMap d = match(left, right, rig);
  int valid = 0, good = 0;
  for (int v = rig.block_radius; v < K.height - rig.block_radius; ++v) {
    for (int u = rig.max_disparity + rig.block_radius; u < K.width - rig.block_radius; ++u) {
      if (d.at(u, v) <= 0.0) continue;
      ++valid;
      if (std::abs(d.at(u, v) - 17.5) <= 0.25) ++good;
    }
  }
  ASSERT_GT(valid, 1000);
  EXPECT_GE(static_cast<double>(good) / valid, 0.95);
}

TEST(Stereo, SizeMismatchIsInvalidInput) {
  StereoRig rig{{10, 10, 4.5, 4.5, 10, 10}, 0.5, 4, 1};
  try {
    (void)match(Image(10, 10), Image(9, 10), rig);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
  }
}

TEST(DisparityToDepth, Examples) {
  StereoRig rig{{700, 700, 2.5, 0.5, 6, 1}, 0.54, 64, 3};
  DisparityMap d(6, 1);
  d.values = {7.0, 0.0, -1.0, 2.5, 17.5, 0.5};
  DepthMap z = disparity_to_depth(d, rig);
  EXPECT_DOUBLE_EQ(z.values[0], 54.0);
  EXPECT_EQ(z.values[1], 0.0);
  EXPECT_EQ(z.values[2], 0.0);
  rig.baseline = 0.5;
  z = disparity_to_depth(d, rig, 120.0);
  EXPECT_EQ(z.values[3], 0.0);  // 140 m > cap
  EXPECT_DOUBLE_EQ(z.values[4], 20.0);
  EXPECT_EQ(z.kind, DepthKind::kDense);
}

TEST(DisparityToDepth, StrictlyDecreasingAndExactRoundTrip) {
  StereoRig rig{{721.5, 721.5, 100, 0.5, 201, 1}, 0.54, 200, 3};
  DisparityMap d(201, 1);
  for (int i = 0; i < 201; ++i) d.values[static_cast<std::size_t>(i)] = 1.0 + 0.37 * i;
  const DepthMap z = disparity_to_depth(d, rig, 1e9);
  for (int i = 1; i < 201; ++i) EXPECT_LT(z.values[static_cast<std::size_t>(i)], z.values[static_cast<std::size_t>(i - 1)]);

  // Analytic disparity for a depth maps back to that depth.
  for (double depth : {1.0, 2.5, 20.0, 54.0, 80.0}) {
    DisparityMap one(1, 1);
    one.values[0] = rig.K.fx * rig.baseline / depth;
    EXPECT_EQ(disparity_to_depth(one, rig, 1e9).values[0], depth);
  }
}

}  // namespace
}  // namespace mcdepth
