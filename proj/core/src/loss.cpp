// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mcdepth/error.hpp"

namespace mcdepth {

void LossWeights::clamp() {
  alpha = std::clamp(alpha, kMin, kAlphaBetaMax);
  beta = std::clamp(beta, kMin, kAlphaBetaMax);
  gamma = std::clamp(gamma, kMin, kGammaMax);
}

bool LossWeights::within_bounds() const {
  return alpha >= kMin && alpha <= kAlphaBetaMax && beta >= kMin && beta <= kAlphaBetaMax &&
         gamma >= kMin && gamma <= kGammaMax;
}

double LossReport::recompose() const {
  double total = alpha * l_silog_sparse;
  if (l_silog_dense) total += beta * *l_silog_dense;
  if (l_con) total += gamma * *l_con;
  return total;
}

namespace {

// SiLog of (factor * pred) against gt over the window [offset, offset + gt.size()).
ad::Var silog_window(const ad::Var& pred, std::span<const double> gt, double lambda,
                     std::size_t offset, double factor, double cap, std::size_t* n_valid) {
  require(lambda >= 0.0 && lambda <= 1.0, "silog: lambda must lie in [0, 1]");
  require(offset + gt.size() <= pred.numel(), "silog: ground truth window exceeds prediction");
  const auto p = pred.value().data();
  std::vector<std::uint8_t> mask(pred.numel(), 0);
  std::vector<double> log_gt;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double g = gt[i];
    if (g > 0.0 && (cap <= 0.0 || g <= cap) && p[offset + i] > 0.0) {
      mask[offset + i] = 1;
      log_gt.push_back(std::log(g));
    }
  }
  const std::size_t n = log_gt.size();
  if (n_valid) *n_valid = n;
  if (n == 0) fail(ErrorKind::kEmptyOverlap, "silog: no pixel with positive prediction and ground truth");

  ad::Tape& tape = *pred.tape();
  ad::Var selected = ad::masked_select(pred, mask);
  if (factor != 1.0) selected = ad::scale(selected, factor);
  const ad::Var e = ad::sub(ad::log(selected), tape.constant(ad::Tensor({static_cast<int>(n)}, std::move(log_gt))));
  const double nd = static_cast<double>(n);
  const ad::Var mse_term = ad::scale(ad::sum(ad::square(e)), 1.0 / (2.0 * nd));
  const ad::Var mean_term = ad::scale(ad::square(ad::sum(e)), lambda / (2.0 * nd * nd));
  return ad::sub(mse_term, mean_term);
}

}  // namespace

ad::Var silog(const ad::Var& pred, std::span<const double> gt, double lambda, std::size_t offset,
              std::size_t* n_valid) {
  return silog_window(pred, gt, lambda, offset, 1.0, 0.0, n_valid);
}

ad::Var silog_norm(const ad::Var& x, const ad::Var& y, double epsilon) {
  require(x.numel() == 1 && y.numel() == 1, "silog_norm: arguments must be scalars");
  return ad::div(x, ad::add_scalar(ad::add(x, y), epsilon));
}

ad::Var consistency(const ad::Var& l_gt, const ad::Var& l_dense, double epsilon) {
  return ad::square(ad::sub(silog_norm(l_gt, l_dense, epsilon), silog_norm(l_dense, l_gt, epsilon)));
}

WeightVars bind_weights(ad::Tape& tape, const LossWeights& weights, bool requires_grad) {
  return {tape.leaf(ad::Tensor::scalar(weights.alpha), requires_grad),
          tape.leaf(ad::Tensor::scalar(weights.beta), requires_grad),
          tape.leaf(ad::Tensor::scalar(weights.gamma), requires_grad)};
}

FinalLoss final_loss(const ad::Var& pred_mc, double f_gt, const CanonicalSpace& space,
                     const DepthMap& sparse_gt, const DepthMap* dense_gt, const WeightVars& weights,
                     const LossWeights& constants, LossMode mode, const LossCaps& caps,
                     std::size_t offset) {
  require(f_gt > 0.0 && space.f_mc > 0.0, "final_loss: focal lengths must be positive");
  const double recover = f_gt / space.f_mc;
  FinalLoss out;
  LossReport& r = out.report;

  const ad::Var alpha = ad::clamp(weights.alpha, LossWeights::kMin, LossWeights::kAlphaBetaMax);
  const ad::Var l_sp = silog_window(pred_mc, sparse_gt.values, constants.lambda, offset, recover,
                                    caps.sparse, &r.n_valid_sparse);
  ad::Var total = ad::mul(alpha, l_sp);
  r.alpha = alpha.item();
  r.beta = std::clamp(weights.beta.item(), LossWeights::kMin, LossWeights::kAlphaBetaMax);
  r.gamma = std::clamp(weights.gamma.item(), LossWeights::kMin, LossWeights::kGammaMax);
  r.l_silog_sparse = l_sp.item();

  if (mode == LossMode::kConsistency && dense_gt != nullptr) {
    require(dense_gt->size() == sparse_gt.size(), "final_loss: dense and sparse maps differ in size");
    const ad::Var beta = ad::clamp(weights.beta, LossWeights::kMin, LossWeights::kAlphaBetaMax);
    const ad::Var gamma = ad::clamp(weights.gamma, LossWeights::kMin, LossWeights::kGammaMax);
    const ad::Var l_de = silog_window(pred_mc, dense_gt->values, constants.lambda, offset, recover,
                                      caps.dense, &r.n_valid_dense);
    const ad::Var l_con = consistency(l_sp, l_de, constants.epsilon);
    total = ad::add(total, ad::add(ad::mul(beta, l_de), ad::mul(gamma, l_con)));
    r.l_silog_dense = l_de.item();
    r.l_con = l_con.item();
  }
  out.loss = total;
  r.l_final = total.item();
  return out;
}

}  // namespace mcdepth
