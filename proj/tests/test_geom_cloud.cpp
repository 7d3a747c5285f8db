// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mcdepth/cloud.hpp"
#include "mcdepth/error.hpp"
#include "mcdepth/geom.hpp"
#include "test_util.hpp"

namespace mcdepth {
namespace {

using Eigen::Vector3d;

RigidTransform z_rotation(double radians, Vector3d t = Vector3d::Zero()) {
  return RigidTransform::from_axis_angle(Vector3d::UnitZ(), radians, t, "cam", "cam");
}

double max_abs_diff(const RigidTransform& a, const RigidTransform& b) {
  return std::max((a.rotation - b.rotation).cwiseAbs().maxCoeff(),
                  (a.translation - b.translation).cwiseAbs().maxCoeff());
}

TEST(MeanFocal, Examples) {
  EXPECT_DOUBLE_EQ(mean_focal(std::vector<double>{700, 710, 690}).f_mc, 700.0);
  EXPECT_DOUBLE_EQ(mean_focal(std::vector<double>{721.5}).f_mc, 721.5);
  EXPECT_DOUBLE_EQ(mean_focal(std::vector<double>{500, 700}).f_mc, 600.0);
  EXPECT_THROW((void)mean_focal(std::vector<double>{}), Error);
  EXPECT_THROW((void)mean_focal(std::vector<double>{700, -1}), Error);
}

TEST(Canonical, ForwardAndBackExamples) {
  const CanonicalSpace space{700.0, {700.0}};
  DepthMap d(2, 1);
  d.values = {10.0, 0.0};
  const DepthMap mc = to_canonical(d, 350.0, space);
  EXPECT_DOUBLE_EQ(mc.values[0], 20.0);
  EXPECT_EQ(mc.values[1], 0.0);
  EXPECT_EQ(to_canonical(d, 700.0, space), d);

  DepthMap p(1, 1);
  p.values = {20.0};
  EXPECT_DOUBLE_EQ(from_canonical(p, 350.0, space).values[0], 10.0);
  p.values = {42.0};
  EXPECT_DOUBLE_EQ(from_canonical(p, 700.0, space).values[0], 42.0);
}

TEST(Canonical, RoundTripWithin1e12) {
  SplitMix64 r(9);
  const CanonicalSpace space = mean_focal(std::vector<double>{612.3, 721.5, 955.0});
  for (int trial = 0; trial < 20; ++trial) {
    const DepthMap d = testing::random_depth(16, 8, r);
    const double f_gt = r.uniform(300.0, 1200.0);
    const DepthMap back = from_canonical(to_canonical(d, f_gt, space), f_gt, space);
    for (std::size_t i = 0; i < d.size(); ++i) ASSERT_NEAR(back.values[i], d.values[i], 1e-12);
  }
}

TEST(Compose, Examples) {
  const RigidTransform t = RigidTransform::from_axis_angle(Vector3d(1, 2, 3).normalized(), 0.7,
                                                           Vector3d(0.5, -1.0, 2.0), "lidar", "cam");
  const RigidTransform c = compose(t, RigidTransform::identity("lidar", "lidar"));
  EXPECT_EQ(max_abs_diff(c, t), 0.0);

  const RigidTransform round = compose(t, t.inverse());
  EXPECT_LT(max_abs_diff(round, RigidTransform::identity("cam", "cam")), 1e-9);
  EXPECT_EQ(round.from_frame, "cam");
  EXPECT_EQ(round.to_frame, "cam");

  const double half_pi = std::numbers::pi / 2.0;
  EXPECT_LT(max_abs_diff(compose(z_rotation(half_pi), z_rotation(half_pi)), z_rotation(std::numbers::pi)), 1e-12);
}

TEST(Compose, RejectsMismatchedFrames) {
  const RigidTransform a = RigidTransform::identity("a", "b");
  const RigidTransform c = RigidTransform::identity("c", "d");
  EXPECT_THROW((void)compose(a, c), Error);
}

TEST(RigidTransformValidate, RejectsNonRotation) {
  RigidTransform t = RigidTransform::identity("a", "b");
  t.rotation(0, 0) = 1.1;
  EXPECT_THROW(t.validate(), Error);
  t.rotation = -Eigen::Matrix3d::Identity();
  EXPECT_THROW(t.validate(), Error);
}

TEST(Intrinsics, ValidateRejectsBadValues) {
  EXPECT_NO_THROW((CameraIntrinsics{700, 700, 320, 240, 640, 480}.validate()));
  EXPECT_THROW((CameraIntrinsics{0, 700, 320, 240, 640, 480}.validate()), Error);
  EXPECT_THROW((CameraIntrinsics{700, 700, 700, 240, 640, 480}.validate()), Error);
  EXPECT_FALSE((CameraIntrinsics{700, 760, 320, 240, 640, 480}.near_square_pixels()));
}

TEST(Calibration, ParseFormatRoundTrip) {
  const std::string text =
      "# rig\nfx: 100\nfy: 101\ncx: 63.5\ncy: 47.5\nwidth: 128\nheight: 96\nbaseline: 0.5\n"
      "T_lidar: 1 0 0 0.1 0 1 0 -0.2 0 0 1 0.3\n";
  const Calibration c = parse_calibration(text);
  EXPECT_EQ(c.intrinsics, (CameraIntrinsics{100, 101, 63.5, 47.5, 128, 96}));
  ASSERT_TRUE(c.baseline.has_value());
  EXPECT_DOUBLE_EQ(*c.baseline, 0.5);
  const RigidTransform& t = c.extrinsics.at("lidar");
  EXPECT_EQ(t.from_frame, "lidar");
  EXPECT_EQ(t.to_frame, kCameraFrame);
  EXPECT_EQ(t.translation, Vector3d(0.1, -0.2, 0.3));

  const Calibration again = parse_calibration(format_calibration(c));
  EXPECT_EQ(again.intrinsics, c.intrinsics);
  EXPECT_EQ(again.extrinsics.at("lidar").translation, t.translation);
}

TEST(Calibration, ErrorsAreConfigKind) {
  try {
    (void)parse_calibration("fx: 100\n");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  EXPECT_THROW((void)parse_calibration("fx: 1\nfy: 1\ncx: 1\ncy: 1\nwidth: 4\nheight: 4\nT_x: 1 2 3\n"), Error);
}

TEST(Merge, Examples) {
  PointCloud a{{{0, 0, 5}, {1, 2, 3}}, "lidar"};
  const RigidTransform id = RigidTransform::identity("lidar", "cam");
  const PointCloud m = merge(std::vector<PointCloud>{a}, std::vector<RigidTransform>{id});
  EXPECT_EQ(m.points, a.points);
  EXPECT_EQ(m.frame, "cam");

  PointCloud b{{}, "lidar_b"};
  PointCloud c{{}, "lidar_c"};
  for (int i = 0; i < 10; ++i) {
    b.points.emplace_back(i, 0, 1);
    c.points.emplace_back(0, i, 2);
  }
  const PointCloud two =
      merge(std::vector<PointCloud>{b, c}, std::vector<RigidTransform>{RigidTransform::identity("lidar_b", "cam"),
                                                                       RigidTransform::identity("lidar_c", "cam")});
  EXPECT_EQ(two.points.size(), 20u);

  const RigidTransform shift =
      RigidTransform::from_axis_angle(Vector3d::UnitZ(), 0.0, Vector3d(1, 0, 0), "lidar", "cam");
  const PointCloud moved =
      merge(std::vector<PointCloud>{PointCloud{{{0, 0, 5}}, "lidar"}}, std::vector<RigidTransform>{shift});
  EXPECT_EQ(moved.points[0], Vector3d(1, 0, 5));
}

TEST(Merge, RejectsFrameMismatch) {
  PointCloud a{{{0, 0, 5}}, "lidar"};
  EXPECT_THROW((void)merge(std::vector<PointCloud>{a}, std::vector<RigidTransform>{RigidTransform::identity("other", "cam")}),
               Error);
}

TEST(Project, Examples) {
  const CameraIntrinsics K{700, 700, 320, 240, 640, 480};
  const DepthMap on_axis = project(PointCloud{{{0, 0, 10}}, "cam"}, K);
  EXPECT_EQ(on_axis.at(320, 240), 10.0);
  EXPECT_EQ(on_axis.count_valid(), 1u);

  const DepthMap off_axis = project(PointCloud{{{1, 0, 10}}, "cam"}, K);
  EXPECT_EQ(off_axis.at(390, 240), 10.0);

  const DepthMap zbuf = project(PointCloud{{{0, 0, 8}, {0, 0, 5}}, "cam"}, K);
  EXPECT_EQ(zbuf.at(320, 240), 5.0);

  EXPECT_EQ(project(PointCloud{{{0, 0, -1}}, "cam"}, K).count_valid(), 0u);
  EXPECT_EQ(project(PointCloud{{{0, 0, 81}}, "cam"}, K).count_valid(), 0u);
  EXPECT_EQ(project(PointCloud{{{100, 0, 10}}, "cam"}, K).count_valid(), 0u);
}

// Lifting the winning pixel centre back to 3D lands within half a pixel of
// the original point at its depth.
TEST(Project, ReliftWithinQuantizationBound) {
  const CameraIntrinsics K{100, 100, 63.5, 47.5, 128, 96};
  SplitMix64 r(21);
  PointCloud cloud{{}, "cam"};
  for (int i = 0; i < 500; ++i) {
    const double z = r.uniform(1.0, 60.0);
    cloud.points.emplace_back(r.uniform(-0.6, 0.6) * z, r.uniform(-0.45, 0.45) * z, z);
  }
  const Projection p = project_indexed(cloud, K, 0.5, 80.0);
  int checked = 0;
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const long src = p.source[static_cast<std::size_t>(v) * K.width + u];
      if (src < 0) continue;
      const Vector3d& x = cloud.points[static_cast<std::size_t>(src)];
      const double z = p.depth.at(u, v);
      EXPECT_EQ(z, x.z());
      const Vector3d lifted = K.unproject(u, v) * z;
      EXPECT_LE(std::abs(lifted.x() - x.x()), 0.5 * z / K.fx + 1e-12);
      EXPECT_LE(std::abs(lifted.y() - x.y()), 0.5 * z / K.fy + 1e-12);
      ++checked;
    }
  }
  EXPECT_GT(checked, 300);
}

TEST(CloudText, RoundTrip) {
  PointCloud c{{{0.125, -3.5, 7.0}, {1e-3, 2.0, 80.25}}, "lidar_left"};
  const PointCloud back = parse_cloud(format_cloud(c));
  EXPECT_EQ(back.frame, c.frame);
  EXPECT_EQ(back.points, c.points);
  EXPECT_THROW((void)parse_cloud("3 cam\n0 0 1\n"), Error);
}

}  // namespace
}  // namespace mcdepth
