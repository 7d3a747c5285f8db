// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mcdepth {

/// `key = value` text, one entry per line, `#` starts a comment. Keys are
/// kept sorted so formatting is stable.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text);
  static KeyValues read(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  bool has(const std::string& key) const { return entries_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;

  // Typed getters; a malformed value is a kConfig error.
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  /// Overlays `other` on top of this.
  void merge(const KeyValues& other);
  /// Throws kConfig naming the first key not in `known`.
  void reject_unknown(const std::set<std::string>& known) const;
  std::string format() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// Formats with the shortest representation that round-trips.
std::string format_double(double value);

}  // namespace mcdepth
