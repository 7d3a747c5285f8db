// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcdepth/config.hpp"

namespace mcdepth {

/// Provenance record written as manifest.txt in every artifact directory.
/// `key: value` lines; wall_time_s is the only field that varies between
/// identical runs.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string version = MCDEPTH_VERSION;
  double wall_time_s = 0.0;

  std::string format() const;
  static RunManifest parse(const std::string& text);
};

/// 16 hex digits of FNV-1a over the formatted configuration.
std::string config_hash(const KeyValues& config);

}  // namespace mcdepth
