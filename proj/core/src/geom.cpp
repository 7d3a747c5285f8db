// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/geom.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/Geometry>

#include "mcdepth/error.hpp"
#include "mcdepth/io.hpp"

namespace mcdepth {

void CameraIntrinsics::validate() const {
  require(fx > 0.0 && fy > 0.0, "intrinsics: focal lengths must be positive");
  require(width > 0 && height > 0, "intrinsics: image size must be positive");
  require(cx > 0.0 && cx < width && cy > 0.0 && cy < height,
          "intrinsics: principal point must lie inside the image");
}

bool CameraIntrinsics::near_square_pixels() const {
  return std::abs(fx - fy) / fx < 0.05;
}

RigidTransform RigidTransform::identity(std::string from, std::string to) {
  RigidTransform t;
  t.from_frame = std::move(from);
  t.to_frame = std::move(to);
  return t;
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double radians,
                                               const Eigen::Vector3d& translation,
                                               std::string from, std::string to) {
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix();
  t.translation = translation;
  t.from_frame = std::move(from);
  t.to_frame = std::move(to);
  return t;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  inv.from_frame = to_frame;
  inv.to_frame = from_frame;
  return inv;
}

void RigidTransform::validate() const {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  require(ortho <= 1e-9, "rigid transform: rotation is not orthonormal");
  require(std::abs(rotation.determinant() - 1.0) <= 1e-9,
          "rigid transform: rotation determinant is not 1");
  require(translation.allFinite(), "rigid transform: non-finite translation");
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  require(a.from_frame == b.to_frame,
          "compose: frame mismatch ('" + b.to_frame + "' -> '" + a.from_frame + "')");
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  out.from_frame = b.from_frame;
  out.to_frame = a.to_frame;
  return out;
}

CanonicalSpace mean_focal(std::span<const double> focals) {
  require(!focals.empty(), "mean_focal: no focal lengths registered");
  CanonicalSpace space;
  double sum = 0.0;
  for (double f : focals) {
    require(f > 0.0 && std::isfinite(f), "mean_focal: focal lengths must be positive");
    sum += f;
    space.source_focals.push_back(f);
  }
  space.f_mc = sum / static_cast<double>(focals.size());
  return space;
}

namespace {

DepthMap scale_valid(const DepthMap& depth, double factor) {
  DepthMap out = depth;
  for (double& d : out.values) {
    if (d > 0.0) d *= factor;
  }
  return out;
}

}  // namespace

DepthMap to_canonical(const DepthMap& depth, double f_gt, const CanonicalSpace& space) {
  require(f_gt > 0.0, "to_canonical: f_gt must be positive");
  require(space.f_mc > 0.0, "to_canonical: canonical focal must be positive");
  return scale_valid(depth, space.f_mc / f_gt);
}

DepthMap from_canonical(const DepthMap& depth, double f_gt, const CanonicalSpace& space) {
  require(f_gt > 0.0, "from_canonical: f_gt must be positive");
  require(space.f_mc > 0.0, "from_canonical: canonical focal must be positive");
  return scale_valid(depth, f_gt / space.f_mc);
}

Calibration parse_calibration(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      fail(ErrorKind::kConfig, "calibration line " + std::to_string(line_no) + ": expected 'key: value'");
    }
    std::string key = line.substr(0, colon);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    entries[key] = line.substr(colon + 1);
  }

  auto number = [&](const std::string& key) {
    const auto it = entries.find(key);
    if (it == entries.end()) fail(ErrorKind::kConfig, "calibration: missing key '" + key + "'");
    std::istringstream ss(it->second);
    double value = 0.0;
    if (!(ss >> value)) fail(ErrorKind::kConfig, "calibration: key '" + key + "' is not a number");
    return value;
  };

  Calibration calib;
  calib.intrinsics.fx = number("fx");
  calib.intrinsics.fy = number("fy");
  calib.intrinsics.cx = number("cx");
  calib.intrinsics.cy = number("cy");
  calib.intrinsics.width = static_cast<int>(number("width"));
  calib.intrinsics.height = static_cast<int>(number("height"));
  try {
    calib.intrinsics.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, std::string("calibration: ") + e.what());
  }
  if (entries.contains("baseline")) calib.baseline = number("baseline");

  for (const auto& [key, value] : entries) {
    if (!key.starts_with("T_")) continue;
    std::istringstream ss(value);
    double m[12];
    for (double& x : m) {
      if (!(ss >> x)) fail(ErrorKind::kConfig, "calibration: '" + key + "' needs 12 numbers");
    }
    RigidTransform t;
    t.rotation << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
    t.translation << m[3], m[7], m[11];
    t.from_frame = key.substr(2);
    t.to_frame = kCameraFrame;
    try {
      t.validate();
    } catch (const Error& e) {
      fail(ErrorKind::kConfig, "calibration: '" + key + "': " + e.what());
    }
    calib.extrinsics.emplace(t.from_frame, t);
  }
  return calib;
}

std::string format_calibration(const Calibration& calib) {
  std::ostringstream out;
  out << std::setprecision(17);
  const auto& k = calib.intrinsics;
  out << "fx: " << k.fx << "\nfy: " << k.fy << "\ncx: " << k.cx << "\ncy: " << k.cy
      << "\nwidth: " << k.width << "\nheight: " << k.height << '\n';
  if (calib.baseline) out << "baseline: " << *calib.baseline << '\n';
  for (const auto& [name, t] : calib.extrinsics) {
    out << "T_" << name << ':';
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out << ' ' << t.rotation(r, c);
      out << ' ' << t.translation(r);
    }
    out << '\n';
  }
  return out.str();
}

Calibration read_calibration(const std::filesystem::path& path) {
  return parse_calibration(io::read_text(path));
}

void write_calibration(const std::filesystem::path& path, const Calibration& calib) {
  io::write_text(path, format_calibration(calib));
}

}  // namespace mcdepth
