// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mcdepth/geom.hpp"
#include "mcdepth/raster.hpp"

namespace mcdepth {

inline constexpr double kDefaultDenseCap = 120.0;

/// Rectified stereo pair sharing intrinsics `K`; the left camera is the
/// reference view.
struct StereoRig {
  CameraIntrinsics K;
  double baseline = 0.0;
  int max_disparity = 64;
  int block_radius = 3;
  bool left_right_check = true;
  double left_right_tolerance = 1.0;
  bool subpixel = true;

  void validate() const;
};

/// SAD block matching on luma over a (2r+1)^2 window, winner-take-all with
/// ties resolved to the smaller disparity, parabola sub-pixel refinement and
/// a left-right consistency check. Invalid pixels carry 0.
DisparityMap match(const Image& left, const Image& right, const StereoRig& rig);

/// D = f * B / d on valid pixels; invalid or D > z_max gives 0.
DepthMap disparity_to_depth(const DisparityMap& disparity, const StereoRig& rig,
                            double z_max = kDefaultDenseCap);

}  // namespace mcdepth
