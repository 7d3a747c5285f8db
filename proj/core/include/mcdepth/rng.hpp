// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace mcdepth {

/// SplitMix64 (Steele, Lea, Flood 2014). 64-bit state, Weyl increment
/// 0x9E3779B97F4A7C15, finalizer constants 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB. Every random draw in the toolkit goes through this
/// generator so datasets and training runs reproduce across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent child stream; does not advance this generator.
  SplitMix64 split(std::uint64_t stream) const;
  SplitMix64 split(std::string_view name) const;

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t z);
/// FNV-1a over bytes; used for stream names and config hashes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace mcdepth
