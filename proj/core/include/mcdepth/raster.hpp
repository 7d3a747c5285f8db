// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace mcdepth {

/// Row-major RGB image, intensities in [0, 1], channels interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

  double& at(int u, int v, int c) {
    return rgb[(static_cast<std::size_t>(v) * width + u) * 3 + c];
  }
  double at(int u, int v, int c) const {
    return rgb[(static_cast<std::size_t>(v) * width + u) * 3 + c];
  }
  bool operator==(const Image&) const = default;
};

/// Single-channel row-major image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
};

enum class DepthKind { kSparse, kDense };

/// Metric depth per pixel in meters. Exactly 0 marks an invalid pixel.
struct DepthMap {
  int width = 0;
  int height = 0;
  DepthKind kind = DepthKind::kSparse;
  std::vector<double> values;

  DepthMap() = default;
  DepthMap(int w, int h, DepthKind k = DepthKind::kSparse)
      : width(w), height(h), kind(k), values(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  bool valid(int u, int v) const { return at(u, v) > 0.0; }
  std::size_t size() const { return values.size(); }
  std::size_t count_valid() const;
  /// Zeroes every value above `cap` (cap <= 0 disables).
  DepthMap capped(double cap) const;
  bool operator==(const DepthMap&) const = default;
};

/// Horizontal disparity in pixels; values <= 0 are invalid.
struct DisparityMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  DisparityMap() = default;
  DisparityMap(int w, int h)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  bool operator==(const DisparityMap&) const = default;
};

/// luma = 0.299 R + 0.587 G + 0.114 B
GrayImage to_gray(const Image& image);

/// Bilinear resample with pixel-centre alignment: output pixel u' samples
/// input coordinate (u' + 0.5) / s - 0.5 with s = out_w / in_w.
Image resize_bilinear(const Image& image, int out_w, int out_h);

/// Nearest-neighbour resample under the same centre convention; keeps the
/// zero-means-invalid encoding intact.
DepthMap resize_nearest(const DepthMap& depth, int out_w, int out_h);

}  // namespace mcdepth
