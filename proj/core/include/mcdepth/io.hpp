// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcdepth/raster.hpp"

namespace mcdepth::io {

/// Single-channel float grid as stored in a PFM file, top row first in memory.
struct FloatGrid {
  int width = 0;
  int height = 0;
  std::vector<float> values;
};

/// Writes "Pf" greyscale PFM, little-endian (scale -1.0), rows bottom-to-top
/// as the format prescribes.
void write_pfm(const std::filesystem::path& path, const FloatGrid& grid);
/// Accepts either endianness; three-channel "PF" files are rejected.
FloatGrid read_pfm(const std::filesystem::path& path);

void write_depth_pfm(const std::filesystem::path& path, const DepthMap& depth);
DepthMap read_depth_pfm(const std::filesystem::path& path, DepthKind kind);
void write_disparity_pfm(const std::filesystem::path& path, const DisparityMap& disparity);
DisparityMap read_disparity_pfm(const std::filesystem::path& path);

/// Binary P6 with maxval 255.
void write_ppm(const std::filesystem::path& path, const Image& image);
/// Reads P6 (colour) or P5 (grey, replicated to three channels), maxval <= 255.
Image read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Quantizes to 8 bits exactly as write_ppm does; lets in-memory pipelines
/// see the same pixels as a reader of the written file.
Image quantize8(const Image& image);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mcdepth::io
