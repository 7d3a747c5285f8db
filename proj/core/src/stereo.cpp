// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/stereo.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mcdepth/error.hpp"

namespace mcdepth {

void StereoRig::validate() const {
  K.validate();
  require(baseline > 0.0, "stereo rig: baseline must be positive");
  require(max_disparity >= 1, "stereo rig: max_disparity must be >= 1");
  require(block_radius >= 1, "stereo rig: block_radius must be >= 1");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Column-summed absolute differences let each window cost be formed from
// (2r+1) column sums instead of (2r+1)^2 pixels.
struct CostVolume {
  int width = 0;
  int height = 0;
  int levels = 0;
  std::vector<double> cost;  // [v][u][d], +inf where undefined

  double at(int u, int v, int d) const {
    return cost[(static_cast<std::size_t>(v) * width + u) * levels + d];
  }
};

// Cost of matching reference pixel (u, v) against the other view at u - sign*d.
CostVolume sad_volume(const GrayImage& ref, const GrayImage& other, int max_d, int r, int sign) {
  const int w = ref.width;
  const int h = ref.height;
  CostVolume vol{w, h, max_d + 1,
                 std::vector<double>(static_cast<std::size_t>(w) * h * (max_d + 1), kInf)};
  std::vector<double> diff(static_cast<std::size_t>(w) * h);
  std::vector<double> colsum(static_cast<std::size_t>(w) * h);
  for (int d = 0; d <= max_d; ++d) {
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const int uo = u - sign * d;
        diff[static_cast<std::size_t>(v) * w + u] =
            (uo >= 0 && uo < w) ? std::abs(ref.at(u, v) - other.at(uo, v)) : kInf;
      }
    }
    for (int v = r; v < h - r; ++v) {
      for (int u = 0; u < w; ++u) {
        double s = 0.0;
        for (int dv = -r; dv <= r; ++dv) s += diff[static_cast<std::size_t>(v + dv) * w + u];
        colsum[static_cast<std::size_t>(v) * w + u] = s;
      }
    }
    for (int v = r; v < h - r; ++v) {
      for (int u = r; u < w - r; ++u) {
        double s = 0.0;
        for (int du = -r; du <= r; ++du) s += colsum[static_cast<std::size_t>(v) * w + u + du];
        vol.cost[(static_cast<std::size_t>(v) * w + u) * vol.levels + d] = s;
      }
    }
  }
  return vol;
}

// Winner-take-all with optional parabola refinement; returns 0 for no match.
DisparityMap select(const CostVolume& vol, bool subpixel) {
  DisparityMap out(vol.width, vol.height);
  for (int v = 0; v < vol.height; ++v) {
    for (int u = 0; u < vol.width; ++u) {
      int best = -1;
      double best_cost = kInf;
      for (int d = 0; d < vol.levels; ++d) {
        const double c = vol.at(u, v, d);
        if (c < best_cost) {
          best_cost = c;
          best = d;
        }
      }
      if (best < 0) continue;
      double disparity = best;
      if (subpixel && best > 0 && best + 1 < vol.levels) {
        const double cm = vol.at(u, v, best - 1);
        const double cp = vol.at(u, v, best + 1);
        const double denom = cm - 2.0 * best_cost + cp;
        if (std::isfinite(cm) && std::isfinite(cp) && denom > 0.0) {
          disparity += 0.5 * (cm - cp) / denom;
        }
      }
      out.at(u, v) = disparity;
    }
  }
  return out;
}

}  // namespace

DisparityMap match(const Image& left, const Image& right, const StereoRig& rig) {
  rig.validate();
  require(left.width == right.width && left.height == right.height,
          "stereo match: left and right images differ in size");
  require(left.width > 0 && left.height > 0, "stereo match: empty images");
  const GrayImage gl = to_gray(left);
  const GrayImage gr = to_gray(right);
  const int r = rig.block_radius;
  const int max_d = rig.max_disparity;

  const DisparityMap dl = select(sad_volume(gl, gr, max_d, r, +1), rig.subpixel);
  DisparityMap out(left.width, left.height);
  DisparityMap dr;
  if (rig.left_right_check) dr = select(sad_volume(gr, gl, max_d, r, -1), rig.subpixel);

  // Pixels without a full window never received a cost; select leaves them at 0.
  for (int v = 0; v < left.height; ++v) {
    for (int u = 0; u < left.width; ++u) {
      const double d = dl.at(u, v);
      if (d <= 0.0) continue;
      if (rig.left_right_check) {
        const int ur = static_cast<int>(std::floor(u - d + 0.5));
        if (ur < 0 || ur >= left.width) continue;
        const double d_back = dr.at(ur, v);
        if (d_back <= 0.0 || std::abs(d - d_back) > rig.left_right_tolerance) continue;
      }
      out.at(u, v) = d;
    }
  }
  return out;
}

DepthMap disparity_to_depth(const DisparityMap& disparity, const StereoRig& rig, double z_max) {
  rig.validate();
  DepthMap depth(disparity.width, disparity.height, DepthKind::kDense);
  const double fb = rig.K.fx * rig.baseline;
  for (std::size_t i = 0; i < disparity.values.size(); ++i) {
    const double d = disparity.values[i];
    if (!(d > 0.0)) continue;
    const double z = fb / d;
    depth.values[i] = (z_max > 0.0 && z > z_max) ? 0.0 : z;
  }
  return depth;
}

}  // namespace mcdepth
