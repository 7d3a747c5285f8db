// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mcdepth/error.hpp"
#include "mcdepth/rng.hpp"

namespace mcdepth {

namespace {

constexpr char kMagic[] = "MCDEPTH-CKPT";
constexpr std::uint32_t kVersion = 1;

struct LayerShape {
  const char* name;
  int out;
  int in;
  bool encoder;
};

std::vector<LayerShape> layers(const DepthNetConfig& c) {
  std::vector<LayerShape> out = {{"enc1", c.enc1_channels, c.input_channels(), true},
                                 {"enc2", c.enc2_channels, c.enc1_channels, true}};
  if (c.enc3_channels > 0) {
    out.push_back({"enc3", c.enc3_channels, c.enc2_channels, true});
    out.push_back({"dec2", c.enc2_channels, c.enc3_channels, false});
  }
  out.push_back({"dec1", c.enc1_channels, c.enc2_channels, false});
  out.push_back({"dec0", c.enc1_channels, c.enc1_channels, false});
  out.push_back({"head", 1, c.enc1_channels, false});
  return out;
}

void put_u64(std::ostream& out, std::uint64_t x) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) fail(ErrorKind::kData, "checkpoint: truncated");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return x;
}

std::string config_block(const DepthNetConfig& c) {
  std::ostringstream out;
  out << std::setprecision(17) << "enc1_channels=" << c.enc1_channels
      << "\nenc2_channels=" << c.enc2_channels
      << "\nenc3_channels=" << c.enc3_channels << "\nkernel=" << c.kernel
      << "\ndepth_scale=" << c.depth_scale << "\nzero_init_head=" << (c.zero_init_head ? 1 : 0)
      << "\ncoord_channels=" << (c.coord_channels ? 1 : 0) << "\ncoord_scale=" << c.coord_scale << '\n';
  return out.str();
}

DepthNetConfig parse_config_block(const std::string& text) {
  DepthNetConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "enc1_channels") c.enc1_channels = std::stoi(value);
    else if (key == "enc2_channels") c.enc2_channels = std::stoi(value);
    else if (key == "enc3_channels") c.enc3_channels = std::stoi(value);
    else if (key == "kernel") c.kernel = std::stoi(value);
    else if (key == "depth_scale") c.depth_scale = std::stod(value);
    else if (key == "zero_init_head") c.zero_init_head = value == "1";
    else if (key == "coord_channels") c.coord_channels = value == "1";
    else if (key == "coord_scale") c.coord_scale = std::stod(value);
    else fail(ErrorKind::kData, "checkpoint: unknown config key '" + key + "'");
  }
  return c;
}

}  // namespace

DepthNet::DepthNet(DepthNetConfig config) : config_(config) {
  require(config_.enc1_channels > 0 && config_.enc2_channels > 0 && config_.enc3_channels >= 0,
          "DepthNet: channel widths must be positive");
  require(config_.kernel > 0 && config_.kernel % 2 == 1, "DepthNet: kernel must be odd");
  require(config_.depth_scale > 0.0, "DepthNet: depth_scale must be positive");
  const int k = config_.kernel;
  for (const auto& l : layers(config_)) {
    params_.push_back({std::string(l.name) + ".weight", ad::Tensor({l.out, l.in, k, k}), l.encoder});
    params_.push_back({std::string(l.name) + ".bias", ad::Tensor({l.out}), l.encoder});
  }
}

void DepthNet::init(std::uint64_t seed) {
  const SplitMix64 root(seed);
  for (auto& p : params_) {
    auto data = p.value.data();
    if (p.name.ends_with(".bias") || (config_.zero_init_head && p.name.starts_with("head."))) {
      std::fill(data.begin(), data.end(), 0.0);
      continue;
    }
    SplitMix64 rng = root.split(p.name);
    const int fan_in = p.value.dim(1) * p.value.dim(2) * p.value.dim(3);
    const double bound = std::sqrt(6.0 / fan_in);
    for (double& w : data) w = rng.uniform(-bound, bound);
  }
}

DepthNet::Output DepthNet::forward(ad::Tape& tape, const ad::Tensor& images,
                                   bool params_require_grad) const {
  Output out;
  for (const auto& p : params_) out.params.push_back(tape.leaf(p.value, params_require_grad));
  out.depth = forward_with(tape, images, out.params);
  return out;
}

ad::Var DepthNet::forward_with(ad::Tape& tape, const ad::Tensor& images, std::span<const ad::Var> w) const {
  require(images.rank() == 4 && images.dim(1) == config_.input_channels(),
          "DepthNet: expected [N, " + std::to_string(config_.input_channels()) + ", H, W] input, got " +
              ad::shape_string(images.shape()));
  const int stride = config_.stride();
  require(images.dim(2) % stride == 0 && images.dim(3) % stride == 0,
          "DepthNet: height and width must be divisible by " + std::to_string(stride) + ", got " +
              ad::shape_string(images.shape()));
  require(w.size() == params_.size(), "DepthNet: wrong number of parameters");
  const ad::Var x = tape.constant(images);

  const ad::Var e1 = ad::relu(ad::conv2d(x, w[0], w[1], 2));
  ad::Var e2 = ad::relu(ad::conv2d(e1, w[2], w[3], 2));
  std::size_t i = 4;
  if (config_.enc3_channels > 0) {
    const ad::Var e3 = ad::relu(ad::conv2d(e2, w[4], w[5], 2));
    e2 = ad::relu(ad::add(ad::conv2d(ad::upsample2x(e3), w[6], w[7], 1), e2));
    i = 8;
  }
  const ad::Var d1 = ad::relu(ad::add(ad::conv2d(ad::upsample2x(e2), w[i], w[i + 1], 1), e1));
  const ad::Var d0 = ad::relu(ad::conv2d(ad::upsample2x(d1), w[i + 2], w[i + 3], 1));
  const ad::Var head = ad::conv2d(d0, w[i + 4], w[i + 5], 1);
  return ad::scale(ad::softplus(head), config_.depth_scale);
}

DepthMap DepthNet::predict(const Image& image, const CameraIntrinsics& K) const {
  const Image* batch[] = {&image};
  const CameraIntrinsics intrinsics[] = {K};
  ad::Tape tape;
  const Output out = forward(tape, model_input(batch, intrinsics, config_), false);
  DepthMap depth(image.width, image.height, DepthKind::kDense);
  const auto values = out.depth.value().data();
  std::copy(values.begin(), values.end(), depth.values.begin());
  return depth;
}

std::size_t DepthNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

std::string DepthNet::describe() const {
  std::ostringstream out;
  out << "layer  shape            params\n";
  for (const auto& p : params_) {
    out << std::left << std::setw(12) << p.name << ' ' << std::setw(16)
        << ad::shape_string(p.value.shape()) << ' ' << p.value.numel()
        << (p.encoder ? "  (encoder)" : "") << '\n';
  }
  out << "total " << parameter_count() << '\n';
  return out.str();
}

void DepthNet::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic) - 1);
  put_u64(out, kVersion);
  const std::string block = config_block(config_);
  put_u64(out, block.size());
  out.write(block.data(), static_cast<std::streamsize>(block.size()));
  put_u64(out, params_.size());
  for (const auto& p : params_) {
    put_u64(out, p.name.size());
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u64(out, p.value.numel());
    for (double x : p.value.data()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  if (!out) fail(ErrorKind::kIo, "checkpoint write failed: " + path.string());
}

DepthNet DepthNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    fail(ErrorKind::kData, "not an mcdepth checkpoint: " + path.string());
  }
  const std::uint64_t version = get_u64(in);
  if (version != kVersion) {
    fail(ErrorKind::kData, "unsupported checkpoint version " + std::to_string(version));
  }
  std::string block(get_u64(in), '\0');
  in.read(block.data(), static_cast<std::streamsize>(block.size()));
  DepthNet net(parse_config_block(block));
  const std::uint64_t count = get_u64(in);
  if (count != net.params_.size()) fail(ErrorKind::kData, "checkpoint: parameter count mismatch");
  for (auto& p : net.params_) {
    std::string name(get_u64(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    if (name != p.name) fail(ErrorKind::kData, "checkpoint: expected '" + p.name + "', found '" + name + "'");
    const std::uint64_t n = get_u64(in);
    if (n != p.value.numel()) fail(ErrorKind::kData, "checkpoint: size mismatch for " + p.name);
    for (double& x : p.value.data()) x = std::bit_cast<double>(get_u64(in));
  }
  return net;
}

bool DepthNet::operator==(const DepthNet& other) const {
  if (!(config_ == other.config_) || params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name || !(params_[i].value == other.params_[i].value)) return false;
  }
  return true;
}

ad::Tensor model_input(std::span<const Image* const> images, std::span<const CameraIntrinsics> intrinsics,
                       const DepthNetConfig& config) {
  require(!images.empty(), "model_input: empty batch");
  require(images.size() == intrinsics.size(), "model_input: one set of intrinsics per image");
  const int w = images[0]->width, h = images[0]->height, channels = config.input_channels();
  ad::Tensor t({static_cast<int>(images.size()), channels, h, w});
  auto data = t.data();
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = *images[n];
    require(img.width == w && img.height == h, "model_input: images in a batch must share a size");
    double* base = data.data() + n * channels * plane;
    for (int c = 0; c < 3; ++c) {
      for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) base[c * plane + static_cast<std::size_t>(v) * w + u] = img.at(u, v, c) - 0.5;
      }
    }
    if (!config.coord_channels) continue;
    const CameraIntrinsics& K = intrinsics[n];
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        base[3 * plane + static_cast<std::size_t>(v) * w + u] = (u - K.cx) / config.coord_scale;
        base[4 * plane + static_cast<std::size_t>(v) * w + u] = (v - K.cy) / config.coord_scale;
      }
    }
  }
  return t;
}

}  // namespace mcdepth
