// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcdepth/autodiff.hpp"

namespace mcdepth {

/// Builds the function under test from leaves bound to `inputs`.
using GradFn = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

struct GradComparison {
  /// max over inputs of max_i |analytic_i - fd_i| / max(max_i |fd_i|, 1e-12)
  double rel_error = 0.0;
  /// Input with the largest error, and the scale of its reference gradient.
  int worst_input = -1;
  double worst_scale = 0.0;
  /// A central difference straddled a kink (one-sided slopes disagree).
  bool kink = false;
};

/// Compares reverse-mode gradients with central differences. Non-scalar
/// outputs are reduced with fixed non-uniform coefficients first.
GradComparison compare_gradients(const GradFn& fn, const std::vector<ad::Tensor>& inputs, double epsilon);

struct GradcheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-5;
  int trials = 100;
  std::uint64_t seed = 1;
  /// Only suites whose name contains this string.
  std::string filter;
};

struct SuiteResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  int redrawn = 0;  ///< instances discarded because a difference crossed a kink
  double max_rel_error = 0.0;
  bool passed() const { return trials > 0 && failures == 0; }
};

struct GradcheckReport {
  std::vector<SuiteResult> suites;
  double seconds = 0.0;
  bool passed() const;
};

std::vector<std::string> gradcheck_suite_names();
GradcheckReport run_gradcheck(const GradcheckOptions& options = {});
std::string format_gradcheck(const GradcheckReport& report);

}  // namespace mcdepth
