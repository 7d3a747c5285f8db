// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mcdepth/error.hpp"

namespace mcdepth::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open: " + path.string());
  return in;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::filesystem::path& path) {
  std::string token;
  while (true) {
    int c = in.peek();
    if (c == EOF) fail(ErrorKind::kData, "truncated header: " + path.string());
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    break;
  }
  in >> token;
  return token;
}

int parse_dim(const std::string& token, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const int value = std::stoi(token, &used);
    if (used != token.size() || value <= 0) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    fail(ErrorKind::kData, "bad image dimension '" + token + "' in " + path.string());
  }
}

std::uint8_t to_byte(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const FloatGrid& grid) {
  require(grid.values.size() == static_cast<std::size_t>(grid.width) * grid.height,
          "write_pfm: value count does not match dimensions");
  auto out = open_out(path);
  out << "Pf\n" << grid.width << ' ' << grid.height << "\n-1.0\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(grid.width) * 4);
  for (int v = grid.height - 1; v >= 0; --v) {
    for (int u = 0; u < grid.width; ++u) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(
          grid.values[static_cast<std::size_t>(v) * grid.width + u]);
      for (int b = 0; b < 4; ++b) row[u * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

FloatGrid read_pfm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string magic = header_token(in, path);
  if (magic == "PF") fail(ErrorKind::kData, "colour PFM not supported: " + path.string());
  if (magic != "Pf") fail(ErrorKind::kData, "not a PFM file: " + path.string());
  FloatGrid grid;
  grid.width = parse_dim(header_token(in, path), path);
  grid.height = parse_dim(header_token(in, path), path);
  const std::string scale_token = header_token(in, path);
  double scale = 0.0;
  try {
    scale = std::stod(scale_token);
  } catch (const std::exception&) {
    fail(ErrorKind::kData, "bad PFM scale in " + path.string());
  }
  if (scale == 0.0) fail(ErrorKind::kData, "PFM scale must be non-zero: " + path.string());
  const bool little = scale < 0.0;
  in.get();  // single whitespace byte before the raster

  const std::size_t count = static_cast<std::size_t>(grid.width) * grid.height;
  std::vector<std::uint8_t> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    fail(ErrorKind::kData, "truncated PFM raster: " + path.string());
  }
  grid.values.resize(count);
  for (int v = 0; v < grid.height; ++v) {
    const int file_row = grid.height - 1 - v;
    for (int u = 0; u < grid.width; ++u) {
      const std::uint8_t* p = &raw[(static_cast<std::size_t>(file_row) * grid.width + u) * 4];
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const int shift = little ? 8 * b : 8 * (3 - b);
        bits |= static_cast<std::uint32_t>(p[b]) << shift;
      }
      grid.values[static_cast<std::size_t>(v) * grid.width + u] = std::bit_cast<float>(bits);
    }
  }
  return grid;
}

void write_depth_pfm(const std::filesystem::path& path, const DepthMap& depth) {
  FloatGrid grid{depth.width, depth.height, {}};
  grid.values.reserve(depth.values.size());
  for (double d : depth.values) grid.values.push_back(static_cast<float>(d));
  write_pfm(path, grid);
}

DepthMap read_depth_pfm(const std::filesystem::path& path, DepthKind kind) {
  const FloatGrid grid = read_pfm(path);
  DepthMap depth(grid.width, grid.height, kind);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const double d = grid.values[i];
    // Non-finite and negative entries are treated as missing.
    depth.values[i] = (std::isfinite(d) && d > 0.0) ? d : 0.0;
  }
  return depth;
}

void write_disparity_pfm(const std::filesystem::path& path, const DisparityMap& disparity) {
  FloatGrid grid{disparity.width, disparity.height, {}};
  grid.values.reserve(disparity.values.size());
  for (double d : disparity.values) grid.values.push_back(static_cast<float>(d));
  write_pfm(path, grid);
}

DisparityMap read_disparity_pfm(const std::filesystem::path& path) {
  const FloatGrid grid = read_pfm(path);
  DisparityMap disparity(grid.width, grid.height);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const double d = grid.values[i];
    disparity.values[i] = std::isfinite(d) ? d : 0.0;
  }
  return disparity;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  auto out = open_out(path);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<std::uint8_t> bytes(image.rgb.size());
  std::transform(image.rgb.begin(), image.rgb.end(), bytes.begin(), to_byte);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<std::uint8_t> bytes(image.values.size());
  std::transform(image.values.begin(), image.values.end(), bytes.begin(), to_byte);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

Image read_pnm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string magic = header_token(in, path);
  if (magic != "P6" && magic != "P5") {
    fail(ErrorKind::kData, "unsupported image format '" + magic + "': " + path.string());
  }
  const int width = parse_dim(header_token(in, path), path);
  const int height = parse_dim(header_token(in, path), path);
  const int maxval = parse_dim(header_token(in, path), path);
  if (maxval > 255) fail(ErrorKind::kData, "16-bit PNM not supported: " + path.string());
  in.get();

  const int channels = magic == "P6" ? 3 : 1;
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    fail(ErrorKind::kData, "truncated image raster: " + path.string());
  }
  Image image(width, height);
  for (std::size_t p = 0; p < static_cast<std::size_t>(width) * height; ++p) {
    for (int c = 0; c < 3; ++c) {
      const std::uint8_t b = bytes[p * channels + (channels == 3 ? c : 0)];
      image.rgb[p * 3 + c] = static_cast<double>(b) / maxval;
    }
  }
  return image;
}

Image quantize8(const Image& image) {
  Image out = image;
  for (double& x : out.rgb) x = static_cast<double>(to_byte(x)) / 255.0;
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

}  // namespace mcdepth::io
