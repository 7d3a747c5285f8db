// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcdepth/config.hpp"
#include "mcdepth/dataset.hpp"
#include "mcdepth/loss.hpp"
#include "mcdepth/metrics.hpp"
#include "mcdepth/model.hpp"
#include "mcdepth/rng.hpp"

namespace mcdepth {

struct TrainConfig {
  double lr = 1e-5;
  int batch_size = 4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  int t_max = 35;
  double eta_min = 1e-8;
  double max_grad_norm = 1.0;
  double resize_min = 0.85;
  double resize_max = 1.15;
  int crop = 64;
  int epochs = 5;
  std::uint64_t seed = 1;
  bool freeze_encoder = false;
  bool freeze_weights = false;
  bool schedule_per_iteration = false;
  bool augment = true;
  LossMode mode = LossMode::kConsistency;
  LossCaps caps;
  /// Share of batches drawn from the dense-and-sparse split.
  double mix_ratio = 0.5;
  double max_skip_fraction = 0.1;
  DepthNetConfig model;
  LossWeights weights;

  void validate() const;
  KeyValues to_kv() const;
  /// Unknown keys are a kConfig error.
  static TrainConfig from_kv(const KeyValues& kv);
};

/// First and second moments of one parameter tensor.
struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

/// One AdamW update at step t (1-based) with decoupled weight decay:
///   w -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * w)
void adamw_step(std::span<double> w, std::span<const double> g, AdamMoments& state, long t, double lr,
                double beta1, double beta2, double eps, double weight_decay);

/// eta_min + (lr - eta_min) / 2 * (1 + cos(pi * t / t_max))
double cosine_lr(double t, const TrainConfig& config);

/// Scales all gradients by max_norm / ||g||_2 when the global norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_grad_norm(std::span<const std::span<double>> grads, double max_norm);
double global_norm(std::span<const std::span<double>> grads);

struct AugmentedSample {
  Image image;
  DepthMap sparse;
  std::optional<DepthMap> dense;
  double scale = 1.0;
  int x0 = 0;
  int y0 = 0;
  /// Intrinsics of the augmented view: focal * s, principal point resized then shifted by the crop.
  CameraIntrinsics intrinsics;
};

/// Resize by s ~ U[resize_min, resize_max] (bilinear image, nearest depth
/// with values divided by s), then a random crop x crop window. A resized
/// image smaller than the crop is zero-padded at the bottom/right.
AugmentedSample augment(const SampleRecord& sample, const TrainConfig& config, SplitMix64& rng);
/// Deterministic variant with explicit scale and crop origin.
AugmentedSample augment_with(const SampleRecord& sample, double scale, int x0, int y0, int crop);

/// Dataset-homogeneous batch schedule for one epoch.
struct Batch {
  int source = 0;  ///< 0 = dense-and-sparse split, 1 = sparse-only split
  std::vector<int> indices;
};

class MixedSampler {
 public:
  MixedSampler(int n_dense, int n_sparse, int batch_size, double mix_ratio, std::uint64_t seed);
  /// Every sample of each split appears exactly once; the order depends only
  /// on (seed, epoch).
  std::vector<Batch> epoch(int epoch) const;

 private:
  int n_[2];
  int batch_size_;
  double mix_ratio_;
  std::uint64_t seed_;
};

struct StepRecord {
  int epoch = 0;
  long step = 0;
  int source = 0;
  double lr = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double clipped_norm = 0.0;
  LossReport parts;
  LossWeights weights;  ///< after the clamp
  int used = 0;
  bool skipped = false;
};

struct ValidationRow {
  std::string split;
  std::string mask;  ///< "sparse" or "dense"
  MetricsReport metrics;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  int batches = 0;
  int skipped = 0;
  std::vector<ValidationRow> validation;
};

struct ValidationSplit {
  std::string name;
  const Dataset* data = nullptr;
};

/// Everything needed to continue a run bit-exactly.
struct TrainerState {
  DepthNet model;
  LossWeights weights;
  std::vector<AdamMoments> model_moments;
  std::vector<AdamMoments> weight_moments;
  long step = 0;
  int next_epoch = 0;

  /// Writes dir/model.ckpt and dir/trainer.state.
  void save(const std::filesystem::path& dir) const;
  static TrainerState load(const std::filesystem::path& dir);
  bool operator==(const TrainerState&) const;
};

struct TrainResult {
  TrainerState state;
  CanonicalSpace space;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

struct FitOptions {
  std::vector<ValidationSplit> validation;
  /// Continue from this state instead of initialising the model from seed.
  std::optional<TrainerState> resume;
  /// Stop after this many epochs in total (resume point for tests).
  std::optional<int> stop_after_epoch;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Canonical space shared by both splits: mean of their focal lengths.
CanonicalSpace training_space(const Dataset* dense_split, const Dataset* sparse_split);

/// Validation metrics in recovered (acquisition camera) space.
std::vector<ValidationRow> validate(const DepthNet& model, const CanonicalSpace& space,
                                    std::span<const ValidationSplit> splits, const LossCaps& caps);

/// Trains on the two splits (either may be null, not both). Throws kData when
/// more than max_skip_fraction of batches have no supervised pixel.
TrainResult fit(const Dataset* dense_split, const Dataset* sparse_split, const TrainConfig& config,
                const FitOptions& options = {});

std::string format_step(const StepRecord& step);
std::string format_epoch(const EpochRecord& epoch);

}  // namespace mcdepth
