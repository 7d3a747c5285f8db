// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mcdepth/raster.hpp"

namespace mcdepth {

/// Pinhole intrinsics in pixels. The canonical-space focal is `fx`.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws kInvalidInput unless fx, fy > 0 and the principal point lies
  /// strictly inside the image.
  void validate() const;
  /// |fx - fy| / fx < 0.05; datasets failing this are registered with a warning.
  bool near_square_pixels() const;

  Eigen::Vector2d project(const Eigen::Vector3d& p_cam) const {
    return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
  }
  /// Ray direction through pixel (u, v) with unit z component.
  Eigen::Vector3d unproject(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
  bool operator==(const CameraIntrinsics&) const = default;
};

/// Maps points expressed in `from_frame` into `to_frame`: p' = R p + t.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  std::string from_frame;
  std::string to_frame;

  static RigidTransform identity(std::string from, std::string to);
  /// Right-handed rotation of `radians` about a unit axis.
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double radians,
                                        const Eigen::Vector3d& translation, std::string from,
                                        std::string to);

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  /// Orthonormality and det = 1, both within 1e-9.
  void validate() const;
};

/// (a ∘ b): applies b first, then a. Requires a.from_frame == b.to_frame.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

/// Mean camera space: a virtual camera with the average focal of every
/// registered source camera.
struct CanonicalSpace {
  double f_mc = 0.0;
  std::vector<double> source_focals;
};

CanonicalSpace mean_focal(std::span<const double> focals);

/// D_mc = (f_mc / f_gt) * D_gt on valid pixels; zeros stay zero.
DepthMap to_canonical(const DepthMap& depth, double f_gt, const CanonicalSpace& space);
/// D_rc = (f_gt / f_mc) * D_mc on valid pixels; zeros stay zero.
DepthMap from_canonical(const DepthMap& depth, double f_gt, const CanonicalSpace& space);

/// Contents of a calib.txt file. Format (one `key: value` per line, `#`
/// comments allowed):
///
///     fx: 100
///     fy: 100
///     cx: 63.5
///     cy: 47.5
///     width: 128
///     height: 96
///     baseline: 0.5                        (optional, meters)
///     T_<sensor>: r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2
///
/// Each `T_<sensor>` is a row-major 3x4 [R|t] mapping the sensor frame
/// `<sensor>` into the camera frame `cam`.
struct Calibration {
  CameraIntrinsics intrinsics;
  std::optional<double> baseline;
  std::map<std::string, RigidTransform> extrinsics;
};

Calibration parse_calibration(const std::string& text);
std::string format_calibration(const Calibration& calib);
Calibration read_calibration(const std::filesystem::path& path);
void write_calibration(const std::filesystem::path& path, const Calibration& calib);

inline constexpr const char* kCameraFrame = "cam";

}  // namespace mcdepth
