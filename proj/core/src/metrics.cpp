// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include <Eigen/Core>

#include "mcdepth/error.hpp"

namespace mcdepth {

namespace {

void gather(const DepthMap& pred, const DepthMap& gt, double z_cap, std::vector<double>& p,
            std::vector<double>& g) {
  require(pred.width == gt.width && pred.height == gt.height,
          "evaluate: prediction and ground truth differ in size");
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    const double d = gt.values[i];
    if (d > 0.0 && (z_cap <= 0.0 || d <= z_cap) && pred.values[i] > 0.0) {
      p.push_back(pred.values[i]);
      g.push_back(d);
    }
  }
}

MetricsReport compute(const std::vector<double>& pv, const std::vector<double>& gv) {
  if (pv.empty()) fail(ErrorKind::kEmptyOverlap, "evaluate: no valid pixels");
  const Eigen::Map<const Eigen::ArrayXd> p(pv.data(), static_cast<Eigen::Index>(pv.size()));
  const Eigen::Map<const Eigen::ArrayXd> g(gv.data(), static_cast<Eigen::Index>(gv.size()));
  const double n = static_cast<double>(pv.size());
  const Eigen::ArrayXd ratio = (p / g).max(g / p);
  MetricsReport r;
  r.n_valid = pv.size();
  r.delta1 = (ratio < 1.25).cast<double>().sum() / n;
  r.delta2 = (ratio < 1.25 * 1.25).cast<double>().sum() / n;
  r.delta3 = (ratio < 1.25 * 1.25 * 1.25).cast<double>().sum() / n;
  r.abs_rel = ((p - g).abs() / g).sum() / n;
  r.rmse = std::sqrt((p - g).square().sum() / n);
  r.rmse_log = std::sqrt((p.log() - g.log()).square().sum() / n);
  r.log10 = (p.log10() - g.log10()).abs().sum() / n;
  return r;
}

DisparityStats stats_over(const DepthMap& dense, const DepthMap& sparse, double cap_dense,
                          double cap_sparse) {
  DisparityStats s;
  double sum = 0.0, sum_abs = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < dense.values.size(); ++i) {
    const double d = dense.values[i], q = sparse.values[i];
    if (!(d > 0.0 && q > 0.0)) continue;
    if (cap_dense > 0.0 && d > cap_dense) continue;
    if (cap_sparse > 0.0 && q > cap_sparse) continue;
    const double diff = d - q;
    sum += diff;
    sum_abs += std::abs(diff);
    sum_sq += diff * diff;
    ++s.n;
  }
  if (s.n == 0) return s;
  const double n = static_cast<double>(s.n);
  s.mean = sum / n;
  s.l1 = sum_abs / n;
  s.mse = sum_sq / n;
  double centred = 0.0;
  for (std::size_t i = 0; i < dense.values.size(); ++i) {
    const double d = dense.values[i], q = sparse.values[i];
    if (!(d > 0.0 && q > 0.0)) continue;
    if (cap_dense > 0.0 && d > cap_dense) continue;
    if (cap_sparse > 0.0 && q > cap_sparse) continue;
    const double c = (d - q) - s.mean;
    centred += c * c;
  }
  s.variance = centred / n;
  return s;
}

Aggregate summarize(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  a.min = *std::min_element(xs.begin(), xs.end());
  a.max = *std::max_element(xs.begin(), xs.end());
  double total = 0.0;
  for (double x : xs) total += x;
  a.avg = total / static_cast<double>(xs.size());
  return a;
}

}  // namespace

MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt, double z_cap) {
  std::vector<double> p, g;
  gather(pred, gt, z_cap, p, g);
  return compute(p, g);
}

MetricsReport evaluate_corpus(std::span<const DepthMap> preds, std::span<const DepthMap> gts,
                              double z_cap) {
  require(preds.size() == gts.size(), "evaluate_corpus: prediction and ground truth counts differ");
  std::vector<double> p, g;
  for (std::size_t i = 0; i < preds.size(); ++i) gather(preds[i], gts[i], z_cap, p, g);
  return compute(p, g);
}

std::string format_metrics(const MetricsReport& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "delta1: " << r.delta1 << "\ndelta2: " << r.delta2 << "\ndelta3: " << r.delta3
      << "\nabs_rel: " << r.abs_rel << "\nrmse: " << r.rmse << "\nrmse_log: " << r.rmse_log
      << "\nlog10: " << r.log10 << "\nn_valid: " << r.n_valid << '\n';
  return out.str();
}

MetricsReport parse_metrics(const std::string& text) {
  std::map<std::string, double> kv;
  std::istringstream in(text);
  std::string key;
  double value = 0.0;
  while (in >> key >> value) {
    if (!key.empty() && key.back() == ':') key.pop_back();
    kv[key] = value;
  }
  auto get = [&](const char* k) {
    const auto it = kv.find(k);
    if (it == kv.end()) fail(ErrorKind::kData, std::string("metrics report: missing '") + k + "'");
    return it->second;
  };
  MetricsReport r;
  r.delta1 = get("delta1");
  r.delta2 = get("delta2");
  r.delta3 = get("delta3");
  r.abs_rel = get("abs_rel");
  r.rmse = get("rmse");
  r.rmse_log = get("rmse_log");
  r.log10 = get("log10");
  r.n_valid = static_cast<std::size_t>(get("n_valid"));
  return r;
}

DisparityReport disparity_report(const DepthMap& dense, const DepthMap& sparse, const Caps& caps) {
  require(dense.width == sparse.width && dense.height == sparse.height,
          "disparity_report: maps differ in size");
  DisparityReport r;
  r.uncapped = stats_over(dense, sparse, 0.0, 0.0);
  if (r.uncapped.n == 0) fail(ErrorKind::kEmptyOverlap, "disparity_report: no co-valid pixels");
  r.capped = stats_over(dense, sparse, caps.dense, caps.sparse);
  return r;
}

CorpusDisparity aggregate(std::span<const DisparityStats> stats) {
  std::vector<double> l1, mse, var;
  for (const auto& s : stats) {
    if (s.n == 0) continue;
    l1.push_back(s.l1);
    mse.push_back(s.mse);
    var.push_back(s.variance);
  }
  return {summarize(l1), summarize(mse), summarize(var), l1.size()};
}

std::string format_disparity(const CorpusDisparity& uncapped, const CorpusDisparity& capped) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "# dense - sparse ground truth disagreement, meters\n";
  out << "caps       stat      min        max        avg\n";
  auto rows = [&](const char* label, const CorpusDisparity& c) {
    const std::pair<const char*, const Aggregate*> items[] = {
        {"L1", &c.l1}, {"MSE", &c.mse}, {"Variance", &c.variance}};
    for (const auto& [name, a] : items) {
      out << std::left << std::setw(10) << label << ' ' << std::setw(9) << name << ' ' << std::right
          << std::setw(10) << a->min << ' ' << std::setw(10) << a->max << ' ' << std::setw(10) << a->avg
          << '\n';
    }
  };
  rows("none", uncapped);
  rows("80/120", capped);
  out << "images: " << uncapped.images << " (capped " << capped.images << ")\n";
  return out.str();
}

}  // namespace mcdepth
