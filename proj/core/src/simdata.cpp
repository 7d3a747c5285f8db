// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/simdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "mcdepth/error.hpp"
#include "mcdepth/rng.hpp"

namespace mcdepth {

namespace {

constexpr double kEps = 1e-9;
constexpr double kDegToRad = std::numbers::pi / 180.0;

Eigen::Vector3d albedo(Material m) {
  switch (m) {
    case Material::kGround: return {0.46, 0.40, 0.26};
    case Material::kTrunk: return {0.36, 0.25, 0.15};
    case Material::kPost: return {0.62, 0.62, 0.60};
    case Material::kCanopy: return {0.22, 0.52, 0.16};
    case Material::kWall: return {0.72, 0.66, 0.55};
  }
  return {0.5, 0.5, 0.5};
}

double lattice(std::uint64_t seed, long ix, long iy, long iz) {
  std::uint64_t h = seed;
  h = mix64(h ^ static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ static_cast<std::uint64_t>(iy) * 0xC2B2AE3D27D4EB4FULL);
  h = mix64(h ^ static_cast<std::uint64_t>(iz) * 0x165667B19E3779F9ULL);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Trilinear value noise in [0, 1).
double value_noise(std::uint64_t seed, const Eigen::Vector3d& p) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const long ix = static_cast<long>(fx), iy = static_cast<long>(fy), iz = static_cast<long>(fz);
  const double tx = smooth(p.x() - fx), ty = smooth(p.y() - fy), tz = smooth(p.z() - fz);
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
    acc += w * lattice(seed, ix + dx, iy + dy, iz + dz);
  }
  return acc;
}

double texture(const Scene& scene, Material m, const Eigen::Vector3d& p) {
  const std::uint64_t seed = scene.texture_seed ^ (static_cast<std::uint64_t>(m) + 1) * 0xD6E8FEB86659FD93ULL;
  const double cell = scene.texture_cell;
  const double n = 0.5 * value_noise(seed, p / cell) + 0.3 * value_noise(seed + 1, p / (3.0 * cell)) +
                   0.2 * value_noise(seed + 2, p / (9.0 * cell));
  return n;
}

Eigen::Vector3d shade(const Scene& scene, const Hit& hit) {
  static const Eigen::Vector3d light = Eigen::Vector3d(-0.3, 0.8, 0.5).normalized();
  const double diffuse = std::max(0.0, hit.normal.dot(light));
  const double lit = 0.35 + 0.65 * diffuse;
  const double tex = 0.55 + 0.9 * texture(scene, hit.material, hit.point);
  Eigen::Vector3d c = albedo(hit.material) * (lit * tex);
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::Vector3d sky(const Eigen::Vector3d& dir) {
  const double up = std::clamp(dir.normalized().y(), 0.0, 1.0);
  return Eigen::Vector3d(0.62, 0.76, 0.92) * (1.0 - 0.3 * up);
}

void consider(std::optional<Hit>& best, double t, const Eigen::Vector3d& origin,
              const Eigen::Vector3d& dir, const Eigen::Vector3d& normal, Material m) {
  if (!(t > kEps)) return;
  if (best && best->t <= t) return;
  best = Hit{t, origin + t * dir, normal, m};
}

}  // namespace

void SceneSpec::validate() const {
  require(rows >= 0, "scene: rows must be non-negative");
  require(row_spacing > 0 && trunk_spacing > 0 && trunk_radius > 0 && trunk_height > 0 &&
              canopy_radius > 0 && row_length > 0 && post_radius > 0 && post_height > 0 &&
              texture_cell > 0,
          "scene: geometric parameters must be positive");
  require(jitter >= 0.0 && jitter < 1.0, "scene: jitter must lie in [0, 1)");
  require(post_every >= 1, "scene: post_every must be >= 1");
  camera_pose.validate();
}

RigidTransform SceneSpec::default_camera_pose(double height, double lateral, double yaw,
                                              double pitch) {
  Eigen::Matrix3d base = Eigen::Vector3d(-1.0, -1.0, 1.0).asDiagonal();
  const Eigen::Matrix3d r_yaw = Eigen::AngleAxisd(-yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d r_pitch = Eigen::AngleAxisd(-pitch, Eigen::Vector3d::UnitX()).toRotationMatrix();
  RigidTransform pose;
  pose.rotation = r_yaw * base * r_pitch;
  pose.translation = Eigen::Vector3d(lateral, height, 0.0);
  pose.from_frame = kCameraFrame;
  pose.to_frame = "world";
  return pose;
}

Scene build_scene(const SceneSpec& spec) {
  spec.validate();
  Scene scene;
  scene.ground = spec.include_ground;
  scene.walls = spec.walls;
  scene.texture_cell = spec.texture_cell;
  SplitMix64 rng(spec.seed);
  scene.texture_seed = rng.split("texture").next();
  SplitMix64 layout = rng.split("layout");

  const int per_row = static_cast<int>(std::floor(spec.row_length / spec.trunk_spacing)) + 1;
  for (int row = 0; row < spec.rows; ++row) {
    const double row_x = (row - 0.5 * (spec.rows - 1)) * spec.row_spacing;
    for (int k = 0; k < per_row && spec.include_trees; ++k) {
      const double j = spec.jitter;
      const double z = spec.row_start + k * spec.trunk_spacing +
                       layout.uniform(-0.5, 0.5) * j * spec.trunk_spacing;
      const double x = row_x + layout.uniform(-0.5, 0.5) * j * 0.5;
      const double trunk_r = spec.trunk_radius * layout.uniform(1.0 - j, 1.0 + j);
      const double trunk_h = spec.trunk_height * layout.uniform(1.0 - 0.5 * j, 1.0 + 0.5 * j);
      const double canopy_r = spec.canopy_radius * layout.uniform(1.0 - j, 1.0 + j);
      scene.cylinders.push_back({x, z, trunk_r, trunk_h + 0.5 * canopy_r, Material::kTrunk});
      scene.spheres.push_back({Eigen::Vector3d(x, trunk_h + 0.6 * canopy_r, z), canopy_r});
    }
    if (spec.include_posts) {
      for (int k = 0; k < per_row; k += spec.post_every) {
        const double z = spec.row_start + (k + 0.5) * spec.trunk_spacing;
        scene.cylinders.push_back({row_x, z, spec.post_radius, spec.post_height, Material::kPost});
      }
    }
  }
  return scene;
}

std::optional<Hit> cast_ray(const Scene& scene, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  std::optional<Hit> best;
  if (scene.ground && d.y() != 0.0) {
    consider(best, -o.y() / d.y(), o, d, Eigen::Vector3d::UnitY(), Material::kGround);
  }
  for (const auto& w : scene.walls) {
    const double denom = w.normal.dot(d);
    if (denom == 0.0) continue;
    const Eigen::Vector3d n = denom < 0 ? w.normal : Eigen::Vector3d(-w.normal);
    consider(best, w.normal.dot(w.point - o) / denom, o, d, n.normalized(), Material::kWall);
  }
  for (const auto& c : scene.cylinders) {
    const double ox = o.x() - c.x, oz = o.z() - c.z;
    const double a = d.x() * d.x() + d.z() * d.z();
    if (a > 0.0) {
      const double b = 2.0 * (ox * d.x() + oz * d.z());
      const double cc = ox * ox + oz * oz - c.radius * c.radius;
      const double disc = b * b - 4.0 * a * cc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
          const double y = o.y() + t * d.y();
          if (t > kEps && y >= 0.0 && y <= c.height) {
            const Eigen::Vector3d p = o + t * d;
            const Eigen::Vector3d n((p.x() - c.x) / c.radius, 0.0, (p.z() - c.z) / c.radius);
            consider(best, t, o, d, n, c.material);
            break;
          }
        }
      }
    }
    if (d.y() != 0.0) {
      const double t = (c.height - o.y()) / d.y();
      const double px = o.x() + t * d.x() - c.x, pz = o.z() + t * d.z() - c.z;
      if (px * px + pz * pz <= c.radius * c.radius) {
        consider(best, t, o, d, Eigen::Vector3d::UnitY(), c.material);
      }
    }
  }
  for (const auto& s : scene.spheres) {
    const Eigen::Vector3d oc = o - s.center;
    const double a = d.squaredNorm();
    const double b = 2.0 * oc.dot(d);
    const double cc = oc.squaredNorm() - s.radius * s.radius;
    const double disc = b * b - 4.0 * a * cc;
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    double t = (-b - sq) / (2.0 * a);
    if (!(t > kEps)) t = (-b + sq) / (2.0 * a);
    if (t > kEps && (!best || t < best->t)) {
      const Eigen::Vector3d p = o + t * d;
      consider(best, t, o, d, (p - s.center) / s.radius, Material::kCanopy);
    }
  }
  return best;
}

double depth_at(const Scene& scene, const CameraIntrinsics& K, const RigidTransform& pose,
                double u, double v) {
  const Eigen::Vector3d dir_cam = K.unproject(u, v);
  const auto hit = cast_ray(scene, pose.translation, pose.rotation * dir_cam);
  // dir_cam has unit z, so the ray parameter is the camera-frame depth.
  return hit ? hit->t : 0.0;
}

Render render(const Scene& scene, const CameraIntrinsics& K, const RigidTransform& pose) {
  K.validate();
  Render out{Image(K.width, K.height), DepthMap(K.width, K.height, DepthKind::kDense)};
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const Eigen::Vector3d dir = pose.rotation * K.unproject(u, v);
      const auto hit = cast_ray(scene, pose.translation, dir);
      const Eigen::Vector3d color = hit ? shade(scene, *hit) : sky(dir);
      for (int c = 0; c < 3; ++c) out.image.at(u, v, c) = color[c];
      out.depth.at(u, v) = hit ? hit->t : 0.0;
    }
  }
  return out;
}

Render render(const SceneSpec& spec, const CameraIntrinsics& K, const RigidTransform& pose) {
  return render(build_scene(spec), K, pose);
}

std::vector<PointCloud> simulate_lidar(const Scene& scene, std::span<const LidarSensor> sensors) {
  std::vector<PointCloud> clouds;
  clouds.reserve(sensors.size());
  for (const auto& s : sensors) {
    require(s.n_lines >= 1, "simulate_lidar: n_lines must be >= 1");
    require(s.azimuth_step_deg > 0.0, "simulate_lidar: azimuth step must be positive");
    s.pose.validate();
    PointCloud cloud;
    cloud.frame = s.name;
    const int n_az = static_cast<int>(
        std::floor((s.azimuth_max_deg - s.azimuth_min_deg) / s.azimuth_step_deg + 1e-9)) + 1;
    for (int line = 0; line < s.n_lines; ++line) {
      const double el_deg = s.n_lines == 1
                                ? s.elevation_min_deg
                                : s.elevation_min_deg + (s.elevation_max_deg - s.elevation_min_deg) *
                                                            line / (s.n_lines - 1);
      const double el = el_deg * kDegToRad;
      for (int k = 0; k < n_az; ++k) {
        const double az = (s.azimuth_min_deg + k * s.azimuth_step_deg) * kDegToRad;
        const Eigen::Vector3d dir(std::cos(el) * std::sin(az), -std::sin(el),
                                  std::cos(el) * std::cos(az));
        const auto hit = cast_ray(scene, s.pose.translation, s.pose.rotation * dir);
        if (!hit || hit->t > s.max_range) continue;
        cloud.points.push_back(hit->t * dir);
      }
    }
    clouds.push_back(std::move(cloud));
  }
  return clouds;
}

std::vector<PointCloud> simulate_lidar(const SceneSpec& spec, std::span<const LidarSensor> sensors) {
  return simulate_lidar(build_scene(spec), sensors);
}

RigidTransform sensor_to_camera(const LidarSensor& sensor, const RigidTransform& camera_pose) {
  RigidTransform world_from_sensor = sensor.pose;
  world_from_sensor.from_frame = sensor.name;
  world_from_sensor.to_frame = camera_pose.to_frame;
  return compose(camera_pose.inverse(), world_from_sensor);
}

RigidTransform shift_along_x(const RigidTransform& pose, double dx) {
  RigidTransform out = pose;
  out.translation += pose.rotation * Eigen::Vector3d(dx, 0.0, 0.0);
  return out;
}

std::pair<Image, Image> stereo_pair(const Scene& scene, const CameraIntrinsics& K,
                                    const RigidTransform& pose, double baseline) {
  require(baseline >= 0.0, "stereo_pair: baseline must be non-negative");
  Image left = render(scene, K, shift_along_x(pose, -0.5 * baseline)).image;
  Image right = render(scene, K, shift_along_x(pose, 0.5 * baseline)).image;
  return {std::move(left), std::move(right)};
}

std::pair<Image, Image> stereo_pair(const SceneSpec& spec, const CameraIntrinsics& K,
                                    const RigidTransform& pose, double baseline) {
  return stereo_pair(build_scene(spec), K, pose, baseline);
}

}  // namespace mcdepth
