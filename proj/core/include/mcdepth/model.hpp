// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mcdepth/autodiff.hpp"
#include "mcdepth/geom.hpp"
#include "mcdepth/raster.hpp"

namespace mcdepth {

struct DepthNetConfig {
  int enc1_channels = 16;
  int enc2_channels = 32;
  /// Third stride-2 stage at H/8; 0 leaves it out.
  int enc3_channels = 48;
  int kernel = 3;
  /// Output = depth_scale * softplus(head). Meters, canonical space.
  double depth_scale = 30.0;
  /// Zero head weights and bias: initial output is ln(2) * depth_scale everywhere.
  bool zero_init_head = true;
  /// Two extra input planes (u - cx) / coord_scale and (v - cy) / coord_scale.
  bool coord_channels = true;
  double coord_scale = 64.0;

  int input_channels() const { return coord_channels ? 5 : 3; }
  /// Input height and width must be multiples of this.
  int stride() const { return enc3_channels > 0 ? 8 : 4; }

  bool operator==(const DepthNetConfig&) const = default;
};

struct Parameter {
  std::string name;
  ad::Tensor value;
  bool encoder = false;
};

/// Convolutional encoder-decoder predicting positive metric depth in the
/// mean canonical camera space.
///
///   enc1  conv k, 3 (+2) -> c1, stride 2, relu             H/2
///   enc2  conv k, c1 -> c2, stride 2, relu                 H/4
///   enc3  conv k, c2 -> c3, stride 2, relu                 H/8  (optional)
///   dec2  relu(conv k(up2(enc3)), c3 -> c2) + enc2 skip)   H/4  (with enc3)
///   dec1  relu(conv k(up2(dec2 or enc2)), c2 -> c1) + enc1 skip)   H/2
///   dec0  conv k(up2(dec1)), c1 -> c1, relu                H
///   head  conv k, c1 -> 1; depth_scale * softplus          H
class DepthNet {
 public:
  explicit DepthNet(DepthNetConfig config = {});

  /// Kaiming fan-in uniform weights (bound sqrt(6 / fan_in)), zero biases.
  void init(std::uint64_t seed);

  struct Output {
    ad::Var depth;                ///< [N, 1, H, W]
    std::vector<ad::Var> params;  ///< leaves in parameters() order
  };
  /// images: model_input() tensor [N, C, H, W] with H, W divisible by
  /// config().stride().
  Output forward(ad::Tape& tape, const ad::Tensor& images, bool params_require_grad = true) const;
  /// Same network with caller-supplied parameter Vars (parameters() order).
  ad::Var forward_with(ad::Tape& tape, const ad::Tensor& images, std::span<const ad::Var> params) const;

  /// Canonical-space depth prediction for one image taken with K.
  DepthMap predict(const Image& image, const CameraIntrinsics& K) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  const DepthNetConfig& config() const { return config_; }
  std::size_t parameter_count() const;
  /// Human-readable layer table with per-layer and total parameter counts.
  std::string describe() const;

  /// Checkpoint: magic, version, config block, then per parameter its name,
  /// element count and little-endian float64 values.
  void save(const std::filesystem::path& path) const;
  static DepthNet load(const std::filesystem::path& path);

  bool operator==(const DepthNet&) const;

 private:
  DepthNetConfig config_;
  std::vector<Parameter> params_;
};

/// Packs images into an [N, C, H, W] tensor: RGB shifted by -0.5, then the
/// principal-point-relative pixel coordinates when the config asks for them.
ad::Tensor model_input(std::span<const Image* const> images, std::span<const CameraIntrinsics> intrinsics,
                       const DepthNetConfig& config);

}  // namespace mcdepth
