// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mcdepth/raster.hpp"

namespace mcdepth {

struct MetricsReport {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double abs_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double log10 = 0.0;
  std::size_t n_valid = 0;
};

/// Standard depth metrics over {gt > 0, gt <= z_cap, pred > 0}. A z_cap <= 0
/// disables the cap. delta_i counts max(pred/gt, gt/pred) < 1.25^i; RMSE_log
/// uses natural logs, log10 the mean absolute log10 difference.
MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt, double z_cap);

/// Pools the valid pixels of several image pairs into one report.
MetricsReport evaluate_corpus(std::span<const DepthMap> preds, std::span<const DepthMap> gts,
                              double z_cap);

/// Fixed-key-order `key: value` text.
std::string format_metrics(const MetricsReport& report);
MetricsReport parse_metrics(const std::string& text);

/// Statistics of (dense - sparse) over pixels valid in both maps.
struct DisparityStats {
  double l1 = 0.0;
  double mse = 0.0;
  double variance = 0.0;
  double mean = 0.0;
  std::size_t n = 0;
};

struct DisparityReport {
  DisparityStats uncapped;
  DisparityStats capped;
};

struct Caps {
  double sparse = 80.0;
  double dense = 120.0;
};

/// Per-image dense-vs-sparse disagreement, before and after depth caps.
/// Throws kEmptyOverlap when no pixel is valid in both maps (uncapped).
DisparityReport disparity_report(const DepthMap& dense, const DepthMap& sparse, const Caps& caps = {});

struct Aggregate {
  double min = 0.0;
  double max = 0.0;
  double avg = 0.0;
};

struct CorpusDisparity {
  Aggregate l1;
  Aggregate mse;
  Aggregate variance;
  std::size_t images = 0;
};

/// Min / max / average of each per-image statistic.
CorpusDisparity aggregate(std::span<const DisparityStats> stats);

std::string format_disparity(const CorpusDisparity& uncapped, const CorpusDisparity& capped);

}  // namespace mcdepth
