// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mcdepth {

enum class ErrorKind {
  kInvalidInput,
  kEmptyOverlap,
  kDomain,
  kConfig,
  kData,
  kIo,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the toolkit; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what,
                    ErrorKind kind = ErrorKind::kInvalidInput) {
  if (!condition) throw Error(kind, what);
}

}  // namespace mcdepth
