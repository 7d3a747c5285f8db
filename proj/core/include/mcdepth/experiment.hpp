// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcdepth/dataset.hpp"
#include "mcdepth/metrics.hpp"
#include "mcdepth/train.hpp"

namespace mcdepth {

/// Consistency-on must cut dense-mask RMSE by at least this fraction.
inline constexpr double kAbDenseRmseGain = 0.10;
/// Sparse-mask delta1 may move by at most this fraction of the baseline.
inline constexpr double kAbSparseDelta1Tolerance = 0.02;

/// Consistency on/off comparison on a synthetic two-split corpus.
struct AbConfig {
  std::uint64_t seed = 1;
  int image_size = 64;
  int train_per_split = 100;
  int val_per_split = 20;
  double focal_sparse = 60.0;
  double focal_dense = 70.0;
  /// LiDAR sampling for both splits. At 64 px the stock rigs label about a
  /// third of the image; these bring coverage down to a few percent.
  int lidar_lines = 8;
  double lidar_azimuth_step_deg = 4.0;
  int max_disparity = 24;
  /// Render and match the dense-split stereo pair at this multiple of the
  /// sample resolution, then downsample the depth labels.
  int stereo_supersample = 1;
  TrainConfig train = desk_train_config();

  static TrainConfig desk_train_config();
  void validate() const;
  KeyValues to_kv() const;
  static AbConfig from_kv(const KeyValues& kv);
};

struct AbCorpus {
  Dataset sparse_train;
  Dataset sparse_val;
  Dataset dense_train;
  Dataset dense_val;
  std::size_t total_samples() const;
};

AbCorpus make_ab_corpus(const AbConfig& config);

struct AbRow {
  std::string split;
  std::string mask;
  MetricsReport off;  ///< SiLog only
  MetricsReport on;   ///< full composite
};

struct AbResult {
  std::vector<AbRow> rows;
  std::vector<EpochRecord> off_epochs;
  std::vector<EpochRecord> on_epochs;
  LossWeights on_weights;
  double seconds = 0.0;

  /// Dense-mask RMSE gain and sparse-mask delta1 checks.
  bool dense_rmse_ok() const;
  bool sparse_delta1_ok() const;
  bool passed() const { return dense_rmse_ok() && sparse_delta1_ok(); }
};

AbResult run_ab(const AbConfig& config, const AbCorpus& corpus);

/// Metrics grid, one line per (validation set, loss), in Table 1 order.
std::string format_ab_table(const AbResult& result);

}  // namespace mcdepth
