// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/raster.hpp"

#include <algorithm>
#include <cmath>

#include "mcdepth/error.hpp"

namespace mcdepth {

std::size_t DepthMap::count_valid() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double d) { return d > 0.0; }));
}

DepthMap DepthMap::capped(double cap) const {
  DepthMap out = *this;
  if (cap <= 0.0) return out;
  for (double& d : out.values) {
    if (d > cap) d = 0.0;
  }
  return out;
}

GrayImage to_gray(const Image& image) {
  GrayImage gray(image.width, image.height);
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u) {
      gray.at(u, v) = 0.299 * image.at(u, v, 0) + 0.587 * image.at(u, v, 1) +
                      0.114 * image.at(u, v, 2);
    }
  }
  return gray;
}

Image resize_bilinear(const Image& image, int out_w, int out_h) {
  require(out_w > 0 && out_h > 0, "resize_bilinear: empty output size");
  require(image.width > 0 && image.height > 0, "resize_bilinear: empty input");
  Image out(out_w, out_h);
  const double sx = static_cast<double>(image.width) / out_w;
  const double sy = static_cast<double>(image.height) / out_h;
  for (int v = 0; v < out_h; ++v) {
    const double y = std::clamp((v + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(std::floor(y));
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = y - y0;
    for (int u = 0; u < out_w; ++u) {
      const double x = std::clamp((u + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(std::floor(x));
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = x - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - wx) * image.at(x0, y0, c) + wx * image.at(x1, y0, c);
        const double bot = (1 - wx) * image.at(x0, y1, c) + wx * image.at(x1, y1, c);
        out.at(u, v, c) = (1 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

DepthMap resize_nearest(const DepthMap& depth, int out_w, int out_h) {
  require(out_w > 0 && out_h > 0, "resize_nearest: empty output size");
  DepthMap out(out_w, out_h, depth.kind);
  const double sx = static_cast<double>(depth.width) / out_w;
  const double sy = static_cast<double>(depth.height) / out_h;
  for (int v = 0; v < out_h; ++v) {
    const int y = std::clamp(static_cast<int>(std::floor((v + 0.5) * sy)), 0, depth.height - 1);
    for (int u = 0; u < out_w; ++u) {
      const int x = std::clamp(static_cast<int>(std::floor((u + 0.5) * sx)), 0, depth.width - 1);
      out.at(u, v) = depth.at(x, y);
    }
  }
  return out;
}

}  // namespace mcdepth
