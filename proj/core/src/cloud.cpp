// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/cloud.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "mcdepth/error.hpp"
#include "mcdepth/io.hpp"

namespace mcdepth {

PointCloud merge(std::span<const PointCloud> clouds, std::span<const RigidTransform> extrinsics) {
  require(clouds.size() == extrinsics.size(), "merge: need exactly one extrinsic per cloud");
  PointCloud merged;
  std::size_t total = 0;
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const auto& t = extrinsics[i];
    require(clouds[i].frame == t.from_frame,
            "merge: cloud frame '" + clouds[i].frame + "' does not match extrinsic source '" +
                t.from_frame + "'");
    if (i == 0) {
      merged.frame = t.to_frame;
    } else {
      require(t.to_frame == merged.frame, "merge: extrinsics target different frames");
    }
    total += clouds[i].points.size();
  }
  merged.points.reserve(total);
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    for (const auto& p : clouds[i].points) merged.points.push_back(extrinsics[i].apply(p));
  }
  return merged;
}

Projection project_indexed(const PointCloud& cloud, const CameraIntrinsics& K, double z_min,
                           double z_max) {
  K.validate();
  require(z_min > 0.0 && z_min < z_max, "project: need 0 < z_min < z_max");
  Projection out{DepthMap(K.width, K.height, DepthKind::kSparse),
                 std::vector<long>(static_cast<std::size_t>(K.width) * K.height, -1)};
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    const double z = p.z();
    if (!(z >= z_min && z <= z_max)) continue;
    const Eigen::Vector2d uv = K.project(p);
    const double u = std::floor(uv.x() + 0.5);
    const double v = std::floor(uv.y() + 0.5);
    if (u < 0 || v < 0 || u >= K.width || v >= K.height) continue;
    const auto idx = static_cast<std::size_t>(v) * K.width + static_cast<std::size_t>(u);
    double& cell = out.depth.values[idx];
    // Ties keep the lower index; the depth value never depends on order.
    if (cell == 0.0 || z < cell || (z == cell && static_cast<long>(i) < out.source[idx])) {
      cell = z;
      out.source[idx] = static_cast<long>(i);
    }
  }
  return out;
}

DepthMap project(const PointCloud& cloud, const CameraIntrinsics& K, double z_min, double z_max) {
  return project_indexed(cloud, K, z_min, z_max).depth;
}

std::string format_cloud(const PointCloud& cloud) {
  std::ostringstream out;
  out << cloud.points.size() << ' ' << (cloud.frame.empty() ? "unknown" : cloud.frame) << '\n';
  out << std::fixed << std::setprecision(9);
  for (const auto& p : cloud.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  return out.str();
}

PointCloud parse_cloud(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  PointCloud cloud;
  if (!(in >> n >> cloud.frame)) fail(ErrorKind::kData, "point cloud: bad header");
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x, y, z;
    if (!(in >> x >> y >> z)) {
      fail(ErrorKind::kData, "point cloud: expected " + std::to_string(n) + " points, got " +
                                 std::to_string(i));
    }
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      fail(ErrorKind::kData, "point cloud: non-finite coordinate at point " + std::to_string(i));
    }
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  io::write_text(path, format_cloud(cloud));
}

PointCloud read_cloud(const std::filesystem::path& path) {
  return parse_cloud(io::read_text(path));
}

}  // namespace mcdepth
