// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/manifest.hpp"

#include <cstdio>
#include <sstream>

#include "mcdepth/error.hpp"
#include "mcdepth/rng.hpp"

namespace mcdepth {

std::string RunManifest::format() const {
  std::ostringstream out;
  out << "command: " << command << '\n'
      << "config_hash: " << config_hash << '\n'
      << "seed: " << seed << '\n'
      << "version: " << version << '\n';
  for (const auto& in : inputs) out << "input: " << in << '\n';
  for (const auto& o : outputs) out << "output: " << o << '\n';
  char wall[32];
  std::snprintf(wall, sizeof(wall), "%.3f", wall_time_s);
  out << "wall_time_s: " << wall << '\n';
  return out.str();
}

RunManifest RunManifest::parse(const std::string& text) {
  RunManifest m;
  m.version.clear();
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(": ");
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon), value = line.substr(colon + 2);
    try {
      if (key == "command") m.command = value;
      else if (key == "config_hash") m.config_hash = value;
      else if (key == "seed") m.seed = std::stoull(value);
      else if (key == "version") m.version = value;
      else if (key == "input") m.inputs.push_back(value);
      else if (key == "output") m.outputs.push_back(value);
      else if (key == "wall_time_s") m.wall_time_s = std::stod(value);
    } catch (const std::exception&) {
      fail(ErrorKind::kData, "manifest: bad value for '" + key + "'");
    }
  }
  if (m.command.empty()) fail(ErrorKind::kData, "manifest: missing command");
  return m;
}

std::string config_hash(const KeyValues& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(config.format())));
  return buf;
}

}  // namespace mcdepth
