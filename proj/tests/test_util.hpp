// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "mcdepth/raster.hpp"
#include "mcdepth/rng.hpp"

namespace mcdepth::testing {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("mcdepth-test-" + tag + "-" + std::to_string(fnv1a64(tag) ^ counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static std::uint64_t& counter() {
    static std::uint64_t c = 0;
    return c;
  }
  std::filesystem::path path_;
};

/// Depth map with roughly `valid_fraction` of pixels in [lo, hi], the rest 0.
inline DepthMap random_depth(int w, int h, SplitMix64& rng, double valid_fraction = 0.7, double lo = 0.5,
                             double hi = 90.0) {
  DepthMap d(w, h);
  for (double& v : d.values) v = rng.uniform() < valid_fraction ? rng.uniform(lo, hi) : 0.0;
  return d;
}

inline Image random_image(int w, int h, SplitMix64& rng) {
  Image img(w, h);
  for (double& v : img.rgb) v = rng.uniform();
  return img;
}

}  // namespace mcdepth::testing
