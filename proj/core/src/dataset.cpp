// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "mcdepth/cloud.hpp"
#include "mcdepth/error.hpp"
#include "mcdepth/io.hpp"
#include "mcdepth/rng.hpp"
#include "mcdepth/stereo.hpp"

namespace mcdepth {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string sample_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", index);
  return buf;
}

DepthMap to_float32(DepthMap depth) {
  for (double& d : depth.values) d = static_cast<double>(static_cast<float>(d));
  return depth;
}

LidarSensor mount(std::string name, double x, double y, double yaw_deg) {
  LidarSensor s;
  s.name = name;
  s.pose = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitY(), yaw_deg * kDeg,
                                           Eigen::Vector3d(x, y, 0.0), std::move(name), kCameraFrame);
  return s;
}

}  // namespace

const char* to_string(DatasetTag tag) {
  return tag == DatasetTag::kSparseOnly ? "sparse_only" : "dense_and_sparse";
}

DatasetTag parse_dataset_tag(const std::string& text) {
  if (text == "sparse_only") return DatasetTag::kSparseOnly;
  if (text == "dense_and_sparse") return DatasetTag::kDenseAndSparse;
  fail(ErrorKind::kData, "unknown dataset tag '" + text + "'");
}

void SampleRecord::validate() const {
  require(dense.has_value() == (tag == DatasetTag::kDenseAndSparse),
          "sample: dense depth must be present exactly for dense_and_sparse samples", ErrorKind::kData);
  require(sparse.width == image.width && sparse.height == image.height,
          "sample: sparse depth and image differ in size", ErrorKind::kData);
  if (dense) {
    require(dense->width == image.width && dense->height == image.height,
            "sample: dense depth and image differ in size", ErrorKind::kData);
  }
}

void DatasetSpec::validate() const {
  require(count >= 0, "dataset: count must be non-negative");
  intrinsics.validate();
  scene.validate();
  require(z_min > 0.0 && sparse_cap > z_min && dense_cap > 0.0, "dataset: invalid depth range");
  if (tag == DatasetTag::kDenseAndSparse && dense_source == DenseSource::kStereo) {
    require(baseline > 0.0, "dataset: stereo baseline must be positive");
    require(stereo_supersample >= 1, "dataset: stereo_supersample must be at least 1");
  }
  for (const auto& l : lidars) {
    require(l.pose.to_frame == kCameraFrame && l.pose.from_frame == l.name,
            "dataset: LiDAR mount '" + l.name + "' must map its own frame into 'cam'");
  }
}

std::vector<LidarSensor> orchard_lidar_rig() {
  std::vector<LidarSensor> rig = {mount("lidar_left", -0.6, -0.35, -30.0),
                                  mount("lidar_center", 0.0, -0.45, 0.0),
                                  mount("lidar_right", 0.6, -0.35, 30.0)};
  for (auto& s : rig) {
    s.n_lines = 32;
    s.azimuth_step_deg = 2.0;
    s.elevation_min_deg = -26.0;
    s.elevation_max_deg = 2.0;
  }
  return rig;
}

std::vector<LidarSensor> single_lidar_rig() {
  LidarSensor s = mount("lidar", 0.0, -0.3, 0.0);
  s.n_lines = 32;
  s.azimuth_step_deg = 1.5;
  s.elevation_min_deg = -26.0;
  s.elevation_max_deg = 2.0;
  return {s};
}

DatasetSpec orchard_preset(int width, int height, double focal) {
  DatasetSpec spec;
  spec.name = "orchard";
  spec.tag = DatasetTag::kSparseOnly;
  spec.intrinsics = {focal, focal, 0.5 * width - 0.5, 0.5 * height - 0.5, width, height};
  spec.lidars = orchard_lidar_rig();
  return spec;
}

DatasetSpec stereo_preset(int width, int height, double focal) {
  DatasetSpec spec;
  spec.name = "stereo";
  spec.tag = DatasetTag::kDenseAndSparse;
  spec.intrinsics = {focal, focal, 0.5 * width - 0.5, 0.5 * height - 0.5, width, height};
  spec.lidars = single_lidar_rig();
  spec.baseline = 0.54;
  spec.max_disparity = std::max(8, width / 4);
  spec.block_radius = width >= 128 ? 3 : 2;
  return spec;
}

SampleRecord generate_sample(const DatasetSpec& spec, int index) {
  spec.validate();
  const SplitMix64 root = SplitMix64(spec.seed).split(static_cast<std::uint64_t>(index));
  SplitMix64 rng = root.split("pose");
  SceneSpec scene_spec = spec.scene;
  scene_spec.seed = root.split("scene").next();
  const double height = spec.camera_height + rng.uniform(-1.0, 1.0) * spec.height_jitter;
  const double lateral = rng.uniform(-1.0, 1.0) * spec.lateral_jitter;
  const double yaw = rng.uniform(-1.0, 1.0) * spec.yaw_jitter_deg * kDeg;
  const double pitch = rng.uniform(-1.0, 1.0) * spec.pitch_jitter_deg * kDeg;
  const RigidTransform pose = SceneSpec::default_camera_pose(height, lateral, yaw, pitch);
  scene_spec.camera_pose = pose;
  const Scene scene = build_scene(scene_spec);
  const CameraIntrinsics& K = spec.intrinsics;

  const Render view = render(scene, K, pose);
  SampleRecord sample;
  sample.image = io::quantize8(view.image);
  sample.intrinsics = K;
  sample.tag = spec.tag;
  sample.exact = to_float32(view.depth);

  std::vector<LidarSensor> sensors = spec.lidars;
  std::vector<RigidTransform> to_camera;
  for (auto& s : sensors) {
    to_camera.push_back(s.pose);
    s.pose = compose(pose, s.pose);
  }
  const auto clouds = simulate_lidar(scene, sensors);
  const PointCloud merged = merge(clouds, to_camera);
  sample.sparse = to_float32(project(merged, K, spec.z_min, spec.sparse_cap));

  if (spec.tag == DatasetTag::kDenseAndSparse) {
    if (spec.dense_source == DenseSource::kRender) {
      DepthMap dense = view.depth.capped(spec.dense_cap);
      sample.dense = to_float32(std::move(dense));
    } else {
      // The sample camera is the left view; the right view sits one baseline along +x.
      const int k = spec.stereo_supersample;
      const CameraIntrinsics Kk{K.fx * k, K.fy * k, k * (K.cx + 0.5) - 0.5, k * (K.cy + 0.5) - 0.5, K.width * k,
                                K.height * k};
      const Image left = k == 1 ? sample.image : io::quantize8(render(scene, Kk, pose).image);
      const Image right = io::quantize8(render(scene, Kk, shift_along_x(pose, spec.baseline)).image);
      StereoRig rig;
      rig.K = Kk;
      rig.baseline = spec.baseline;
      rig.max_disparity = spec.max_disparity * k;
      rig.block_radius = spec.block_radius;
      rig.left_right_tolerance = spec.left_right_tolerance * k;
      const DepthMap dense = disparity_to_depth(match(left, right, rig), rig, spec.dense_cap);
      sample.dense = to_float32(k == 1 ? dense : resize_nearest(dense, K.width, K.height));
    }
    sample.dense->kind = DepthKind::kDense;
  }
  return sample;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds{spec.name, spec.tag, spec.intrinsics, {}};
  ds.samples.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) ds.samples.push_back(generate_sample(spec, i));
  return ds;
}

KeyValues DatasetSpec::to_kv() const {
  KeyValues kv;
  kv.set("name", name);
  kv.set("tag", to_string(tag));
  kv.set("count", count);
  kv.set("seed", seed);
  kv.set("width", intrinsics.width);
  kv.set("height", intrinsics.height);
  kv.set("fx", intrinsics.fx);
  kv.set("fy", intrinsics.fy);
  kv.set("cx", intrinsics.cx);
  kv.set("cy", intrinsics.cy);
  kv.set("z_min", z_min);
  kv.set("sparse_cap", sparse_cap);
  kv.set("dense_cap", dense_cap);
  kv.set("dense_source", dense_source == DenseSource::kStereo ? "stereo" : "render");
  kv.set("baseline", baseline);
  kv.set("max_disparity", max_disparity);
  kv.set("block_radius", block_radius);
  kv.set("left_right_tolerance", left_right_tolerance);
  kv.set("stereo_supersample", stereo_supersample);
  kv.set("rows", scene.rows);
  kv.set("row_spacing", scene.row_spacing);
  kv.set("trunk_spacing", scene.trunk_spacing);
  kv.set("include_posts", scene.include_posts);
  return kv;
}

DatasetSpec DatasetSpec::from_kv(const KeyValues& kv) {
  kv.reject_unknown({"name", "tag", "count", "seed", "width", "height", "fx", "fy", "cx", "cy", "z_min",
                     "sparse_cap", "dense_cap", "dense_source", "baseline", "max_disparity",
                     "block_radius", "left_right_tolerance", "stereo_supersample", "rows", "row_spacing", "trunk_spacing", "include_posts"});
  const std::string tag = kv.get_string("tag", "sparse_only");
  const int width = static_cast<int>(kv.get_int("width", 128));
  const int height = static_cast<int>(kv.get_int("height", 96));
  const double focal = kv.get_double("fx", 100.0);
  DatasetSpec spec;
  try {
    spec = parse_dataset_tag(tag) == DatasetTag::kSparseOnly ? orchard_preset(width, height, focal)
                                                             : stereo_preset(width, height, focal);
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
  spec.name = kv.get_string("name", spec.name);
  spec.count = static_cast<int>(kv.get_int("count", spec.count));
  spec.seed = kv.get_u64("seed", spec.seed);
  spec.intrinsics.fy = kv.get_double("fy", focal);
  spec.intrinsics.cx = kv.get_double("cx", spec.intrinsics.cx);
  spec.intrinsics.cy = kv.get_double("cy", spec.intrinsics.cy);
  spec.z_min = kv.get_double("z_min", spec.z_min);
  spec.sparse_cap = kv.get_double("sparse_cap", spec.sparse_cap);
  spec.dense_cap = kv.get_double("dense_cap", spec.dense_cap);
  const std::string source = kv.get_string("dense_source", "stereo");
  if (source != "stereo" && source != "render") fail(ErrorKind::kConfig, "dense_source must be stereo or render");
  spec.dense_source = source == "stereo" ? DenseSource::kStereo : DenseSource::kRender;
  spec.baseline = kv.get_double("baseline", spec.baseline);
  spec.max_disparity = static_cast<int>(kv.get_int("max_disparity", spec.max_disparity));
  spec.block_radius = static_cast<int>(kv.get_int("block_radius", spec.block_radius));
  spec.left_right_tolerance = kv.get_double("left_right_tolerance", spec.left_right_tolerance);
  spec.stereo_supersample = static_cast<int>(kv.get_int("stereo_supersample", spec.stereo_supersample));
  spec.scene.rows = static_cast<int>(kv.get_int("rows", spec.scene.rows));
  spec.scene.row_spacing = kv.get_double("row_spacing", spec.scene.row_spacing);
  spec.scene.trunk_spacing = kv.get_double("trunk_spacing", spec.scene.trunk_spacing);
  spec.scene.include_posts = kv.get_bool("include_posts", spec.scene.include_posts);
  try {
    spec.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
  return spec;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                   const std::string& manifest_header) {
  std::filesystem::create_directories(dir);
  Calibration calib;
  calib.intrinsics = dataset.intrinsics;
  write_calibration(dir / "calib.txt", calib);
  std::ostringstream manifest;
  manifest << manifest_header;
  manifest << "dataset_name: " << dataset.name << "\ndataset_tag: " << to_string(dataset.tag)
           << "\nsamples: " << dataset.samples.size() << '\n';
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const SampleRecord& s = dataset.samples[i];
    const std::string stem = sample_stem(static_cast<int>(i));
    io::write_ppm(dir / (stem + ".ppm"), s.image);
    io::write_depth_pfm(dir / (stem + ".sparse.pfm"), s.sparse);
    if (s.dense) io::write_depth_pfm(dir / (stem + ".dense.pfm"), *s.dense);
    manifest << "sample: " << stem << ' ' << to_string(s.tag) << '\n';
  }
  io::write_text(dir / "manifest.txt", manifest.str());
}

Dataset read_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorKind::kData, "not a dataset directory: " + dir.string());
  Dataset ds;
  ds.intrinsics = read_calibration(dir / "calib.txt").intrinsics;
  std::istringstream manifest(io::read_text(dir / "manifest.txt"));
  std::string line;
  bool have_tag = false;
  while (std::getline(manifest, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dataset_name:") {
      ls >> ds.name;
    } else if (key == "dataset_tag:") {
      std::string tag;
      ls >> tag;
      ds.tag = parse_dataset_tag(tag);
      have_tag = true;
    } else if (key == "sample:") {
      std::string stem, tag;
      if (!(ls >> stem >> tag)) fail(ErrorKind::kData, "manifest: malformed sample line '" + line + "'");
      SampleRecord s;
      s.tag = parse_dataset_tag(tag);
      s.intrinsics = ds.intrinsics;
      s.image = io::read_pnm(dir / (stem + ".ppm"));
      s.sparse = io::read_depth_pfm(dir / (stem + ".sparse.pfm"), DepthKind::kSparse);
      if (s.tag == DatasetTag::kDenseAndSparse) {
        s.dense = io::read_depth_pfm(dir / (stem + ".dense.pfm"), DepthKind::kDense);
      }
      s.validate();
      ds.samples.push_back(std::move(s));
    }
  }
  if (!have_tag) fail(ErrorKind::kData, "manifest: missing dataset_tag in " + dir.string());
  return ds;
}

}  // namespace mcdepth
