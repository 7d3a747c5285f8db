// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "mcdepth/autodiff.hpp"
#include "mcdepth/geom.hpp"
#include "mcdepth/raster.hpp"

namespace mcdepth {

/// Learnable composite weights plus the fixed SiLog constants.
struct LossWeights {
  double alpha = 1.2;
  double beta = 1.2;
  double gamma = 0.5;
  double lambda = 0.3;
  double epsilon = 1e-6;

  static constexpr double kMin = 1e-4;
  static constexpr double kAlphaBetaMax = 2.0;
  static constexpr double kGammaMax = 1.0;

  void clamp();
  bool within_bounds() const;
};

struct LossReport {
  double l_silog_sparse = 0.0;
  std::optional<double> l_silog_dense;
  std::optional<double> l_con;
  double l_final = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::size_t n_valid_sparse = 0;
  std::size_t n_valid_dense = 0;

  /// alpha * sparse + beta * dense + gamma * con over the parts present.
  double recompose() const;
};

/// SiLog over pixels with gt > 0 and pred > 0:
///   (1 / 2N) sum e^2 - (lambda / 2N^2) (sum e)^2,   e = log pred - log gt.
/// `gt` covers pred elements [offset, offset + gt.size()); this lets one
/// batched prediction be scored per sample. Throws kEmptyOverlap when N = 0.
ad::Var silog(const ad::Var& pred, std::span<const double> gt, double lambda,
              std::size_t offset = 0, std::size_t* n_valid = nullptr);

/// x / (x + y + epsilon) on scalar Vars.
ad::Var silog_norm(const ad::Var& x, const ad::Var& y, double epsilon = 1e-6);

/// (norm(l_gt, l_dense) - norm(l_dense, l_gt))^2.
ad::Var consistency(const ad::Var& l_gt, const ad::Var& l_dense, double epsilon = 1e-6);

enum class LossMode {
  kSilog,        ///< alpha * L_silog(D_rc, D_gt) only
  kConsistency,  ///< full composite; dense terms only when dense gt exists
};

/// Tape leaves for alpha, beta, gamma.
struct WeightVars {
  ad::Var alpha;
  ad::Var beta;
  ad::Var gamma;
};

WeightVars bind_weights(ad::Tape& tape, const LossWeights& weights, bool requires_grad = true);

struct LossCaps {
  double sparse = 80.0;
  double dense = 120.0;
};

struct FinalLoss {
  ad::Var loss;
  LossReport report;
};

/// Recovers D_rc = (f_gt / f_mc) * pred_mc and forms the composite. `pred_mc`
/// may be a batch; the sample occupies [offset, offset + sparse.size()).
/// Ground truth beyond the caps is ignored.
FinalLoss final_loss(const ad::Var& pred_mc, double f_gt, const CanonicalSpace& space,
                     const DepthMap& sparse_gt, const DepthMap* dense_gt, const WeightVars& weights,
                     const LossWeights& constants, LossMode mode, const LossCaps& caps = {},
                     std::size_t offset = 0);

}  // namespace mcdepth
