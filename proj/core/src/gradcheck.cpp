// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mcdepth/error.hpp"
#include "mcdepth/geom.hpp"
#include "mcdepth/loss.hpp"
#include "mcdepth/model.hpp"
#include "mcdepth/raster.hpp"
#include "mcdepth/rng.hpp"

namespace mcdepth {

namespace {

using ad::Tensor;
using ad::Var;

double reduce_coefficient(std::size_t i) { return 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3); }

// Scalar objective and, optionally, the analytic gradients of each input.
double evaluate(const GradFn& fn, const std::vector<Tensor>& inputs, std::vector<Tensor>* grads) {
  ad::Tape tape;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
  Var y = fn(tape, leaves);
  if (y.numel() != 1) {
    Tensor c(y.shape());
    for (std::size_t i = 0; i < c.numel(); ++i) c[i] = reduce_coefficient(i);
    y = ad::sum(ad::mul(y, tape.constant(std::move(c))));
  }
  if (grads) {
    tape.backward(y);
    grads->clear();
    for (const auto& l : leaves) grads->push_back(l.grad());
  }
  return y.item();
}

struct Instance {
  std::vector<Tensor> inputs;
  GradFn fn;
  bool kink_prone = false;
};

using Maker = std::function<Instance(SplitMix64&)>;

Tensor random_tensor(std::vector<int> shape, SplitMix64& rng, double lo, double hi, bool random_sign = false) {
  Tensor t(std::move(shape));
  for (auto& x : t.data()) {
    x = rng.uniform(lo, hi);
    if (random_sign && rng.uniform() < 0.5) x = -x;
  }
  return t;
}

// Values at least `gap` away from every point in `kinks`.
Tensor guarded_tensor(std::vector<int> shape, SplitMix64& rng, double lo, double hi, std::vector<double> kinks,
                      double gap) {
  Tensor t(std::move(shape));
  for (auto& x : t.data()) {
    do {
      x = rng.uniform(lo, hi);
    } while (std::any_of(kinks.begin(), kinks.end(), [&](double k) { return std::abs(x - k) < gap; }));
  }
  return t;
}

std::vector<int> random_shape(SplitMix64& rng) {
  const int rank = 1 + static_cast<int>(rng.below(3));
  std::vector<int> shape;
  for (int i = 0; i < rank; ++i) shape.push_back(1 + static_cast<int>(rng.below(4)));
  return shape;
}

Maker unary(std::function<Var(const Var&)> op, double lo, double hi, bool random_sign = false) {
  return [=](SplitMix64& rng) {
    return Instance{{random_tensor(random_shape(rng), rng, lo, hi, random_sign)},
                    [op](ad::Tape&, std::span<const Var> x) { return op(x[0]); }};
  };
}

Maker binary(std::function<Var(const Var&, const Var&)> op, bool divisor_guard) {
  return [=](SplitMix64& rng) {
    const auto shape = random_shape(rng);
    Tensor a = random_tensor(shape, rng, -2.0, 2.0);
    Tensor b = divisor_guard ? random_tensor(shape, rng, 0.5, 2.0, true) : random_tensor(shape, rng, -2.0, 2.0);
    return Instance{{a, b}, [op](ad::Tape&, std::span<const Var> x) { return op(x[0], x[1]); }};
  };
}

// One operand holds a single element.
Maker broadcast() {
  return [](SplitMix64& rng) {
    const int which = static_cast<int>(rng.below(4));
    const bool scalar_left = rng.uniform() < 0.5;
    const auto shape = random_shape(rng);
    Tensor arr = random_tensor(shape, rng, 0.5, 2.0, true);
    Tensor one = random_tensor({1}, rng, 0.5, 2.0, true);
    std::vector<Tensor> in = scalar_left ? std::vector<Tensor>{one, arr} : std::vector<Tensor>{arr, one};
    return Instance{in, [which](ad::Tape&, std::span<const Var> x) {
                      switch (which) {
                        case 0: return ad::add(x[0], x[1]);
                        case 1: return ad::sub(x[0], x[1]);
                        case 2: return ad::mul(x[0], x[1]);
                        default: return ad::div(x[0], x[1]);
                      }
                    }};
  };
}

Maker conv() {
  return [](SplitMix64& rng) {
    const int stride = 1 + static_cast<int>(rng.below(2));
    const int out_ch = 1 + static_cast<int>(rng.below(3));
    const int k = rng.uniform() < 0.5 ? 1 : 3;
    Tensor x = random_tensor({1, 3, 5, 5}, rng, -1.0, 1.0);
    Tensor w = random_tensor({out_ch, 3, k, k}, rng, -1.0, 1.0);
    Tensor b = random_tensor({out_ch}, rng, -1.0, 1.0);
    return Instance{{x, w, b}, [stride](ad::Tape&, std::span<const Var> v) {
                      return ad::conv2d(v[0], v[1], v[2], stride);
                    }};
  };
}

Maker masked() {
  return [](SplitMix64& rng) {
    const auto shape = random_shape(rng);
    Tensor a = random_tensor(shape, rng, -2.0, 2.0);
    std::vector<std::uint8_t> mask(a.numel());
    for (auto& m : mask) m = rng.uniform() < 0.6 ? 1 : 0;
    mask[rng.below(mask.size())] = 1;
    return Instance{{a}, [mask](ad::Tape&, std::span<const Var> x) { return ad::masked_select(x[0], mask); }};
  };
}

Maker reshape() {
  return [](SplitMix64& rng) {
    const int a = 1 + static_cast<int>(rng.below(4)), b = 1 + static_cast<int>(rng.below(4));
    return Instance{{random_tensor({a, b}, rng, -2.0, 2.0)}, [a, b](ad::Tape&, std::span<const Var> x) {
                      return ad::reshape(x[0], {b, 1, a});
                    }};
  };
}

Maker upsample() {
  return [](SplitMix64& rng) {
    const int c = 1 + static_cast<int>(rng.below(2));
    const int h = 1 + static_cast<int>(rng.below(3)), w = 1 + static_cast<int>(rng.below(3));
    return Instance{{random_tensor({1, c, h, w}, rng, -2.0, 2.0)},
                    [](ad::Tape&, std::span<const Var> x) { return ad::upsample2x(x[0]); }};
  };
}

std::vector<double> sparse_truth(std::size_t n, SplitMix64& rng, double density) {
  std::vector<double> gt(n, 0.0);
  for (auto& g : gt) {
    if (rng.uniform() < density) g = rng.uniform(1.0, 40.0);
  }
  gt[rng.below(n)] = rng.uniform(1.0, 25.0);
  return gt;
}

Maker silog_suite() {
  return [](SplitMix64& rng) {
    const int n = 2 + static_cast<int>(rng.below(30));
    Tensor pred = random_tensor({n}, rng, 1.0, 40.0);
    const double lambda = rng.uniform(0.0, 1.0);
    const auto gt = sparse_truth(static_cast<std::size_t>(n), rng, 0.5);
    return Instance{{pred}, [gt, lambda](ad::Tape&, std::span<const Var> x) { return silog(x[0], gt, lambda); }};
  };
}

Maker norm_suite() {
  return [](SplitMix64& rng) {
    return Instance{{random_tensor({1}, rng, 0.01, 3.0), random_tensor({1}, rng, 0.01, 3.0)},
                    [](ad::Tape&, std::span<const Var> x) { return silog_norm(x[0], x[1]); }};
  };
}

Maker consistency_suite() {
  return [](SplitMix64& rng) {
    return Instance{{random_tensor({1}, rng, 0.01, 3.0), random_tensor({1}, rng, 0.01, 3.0)},
                    [](ad::Tape&, std::span<const Var> x) { return consistency(x[0], x[1]); }};
  };
}

// The full composite with gradients into the prediction and alpha, beta, gamma.
Maker composite() {
  return [](SplitMix64& rng) {
    const int batch = 1 + static_cast<int>(rng.below(2));
    const int h = 2 + static_cast<int>(rng.below(4)), w = 2 + static_cast<int>(rng.below(4));
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t offset = plane * rng.below(static_cast<std::uint64_t>(batch));
    Tensor pred = random_tensor({batch, 1, h, w}, rng, 1.0, 40.0);
    DepthMap sparse(w, h, DepthKind::kSparse), dense(w, h, DepthKind::kDense);
    sparse.values = sparse_truth(plane, rng, 0.4);
    CanonicalSpace space;
    space.f_mc = rng.uniform(50.0, 150.0);
    const double f_gt = rng.uniform(50.0, 150.0);
    // Dense truth close to the recovered prediction: the two SiLog terms then
    // differ and the consistency term (the gradient into gamma) stays well away
    // from zero, where central differences lose their relative precision.
    for (std::size_t i = 0; i < plane; ++i) {
      const double p = pred[offset + i] * f_gt / space.f_mc * std::exp(rng.uniform(-0.2, 0.2));
      dense.values[i] = rng.uniform() < 0.9 && p <= 35.0 ? p : 0.0;
    }
    dense.values[rng.below(plane)] = rng.uniform(1.0, 25.0);
    Tensor alpha = random_tensor({1}, rng, 0.2, 1.8);
    Tensor beta = random_tensor({1}, rng, 0.2, 1.8);
    Tensor gamma = random_tensor({1}, rng, 0.1, 0.9);
    LossWeights constants;
    constants.lambda = rng.uniform(0.0, 1.0);
    return Instance{{pred, alpha, beta, gamma},
                    [=](ad::Tape&, std::span<const Var> x) {
                      const WeightVars wv{x[1], x[2], x[3]};
                      const LossCaps caps{30.0, 35.0};
                      return final_loss(x[0], f_gt, space, sparse, &dense, wv, constants, LossMode::kConsistency,
                                        caps, offset)
                          .loss;
                    }};
  };
}

Maker depthnet() {
  return [](SplitMix64& rng) {
    DepthNetConfig cfg;
    cfg.enc1_channels = 3;
    cfg.enc2_channels = 4;
    cfg.enc3_channels = 5;
    cfg.depth_scale = 5.0;
    cfg.zero_init_head = false;
    auto net = std::make_shared<DepthNet>(cfg);
    net->init(rng.next());
    auto images = std::make_shared<Tensor>(random_tensor({1, cfg.input_channels(), 8, 8}, rng, -0.5, 0.5));
    std::vector<Tensor> inputs;
    for (const auto& p : net->parameters()) inputs.push_back(p.value);
    Instance inst{inputs, [net, images](ad::Tape& tape, std::span<const Var> x) {
                    return net->forward_with(tape, *images, x);
                  }};
    inst.kink_prone = true;
    return inst;
  };
}

struct Suite {
  std::string name;
  Maker make;
};

std::vector<Suite> suites() {
  return {
      {"add", binary(ad::add, false)},
      {"sub", binary(ad::sub, false)},
      {"mul", binary(ad::mul, false)},
      {"div", binary(ad::div, true)},
      {"broadcast", broadcast()},
      {"scale", unary([](const Var& a) { return ad::scale(a, -1.7); }, -2.0, 2.0)},
      {"add_scalar", unary([](const Var& a) { return ad::add_scalar(a, 0.9); }, -2.0, 2.0)},
      {"log", unary([](const Var& a) { return ad::log(a); }, 0.2, 3.0)},
      {"exp", unary([](const Var& a) { return ad::exp(a); }, -2.0, 2.0)},
      {"square", unary([](const Var& a) { return ad::square(a); }, -2.0, 2.0)},
      {"sum", unary([](const Var& a) { return ad::sum(a); }, -2.0, 2.0)},
      {"mean", unary([](const Var& a) { return ad::mean(a); }, -2.0, 2.0)},
      {"clamp",
       [](SplitMix64& rng) {
         return Instance{{guarded_tensor(random_shape(rng), rng, -2.0, 2.0, {-1.0, 1.0}, 1e-3)},
                         [](ad::Tape&, std::span<const Var> x) { return ad::clamp(x[0], -1.0, 1.0); }};
       }},
      {"relu",
       [](SplitMix64& rng) {
         return Instance{{guarded_tensor(random_shape(rng), rng, -2.0, 2.0, {0.0}, 1e-3)},
                         [](ad::Tape&, std::span<const Var> x) { return ad::relu(x[0]); }};
       }},
      {"softplus", unary([](const Var& a) { return ad::softplus(a); }, -4.0, 4.0)},
      {"reshape", reshape()},
      {"masked_select", masked()},
      {"conv2d", conv()},
      {"upsample2x", upsample()},
      {"silog", silog_suite()},
      {"silog_norm", norm_suite()},
      {"consistency", consistency_suite()},
      {"final_loss", composite()},
      {"depthnet", depthnet()},
  };
}

}  // namespace

GradComparison compare_gradients(const GradFn& fn, const std::vector<Tensor>& inputs, double epsilon) {
  std::vector<Tensor> analytic;
  const double f0 = evaluate(fn, inputs, &analytic);
  GradComparison out;
  std::vector<Tensor> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    double max_diff = 0.0, max_fd = 0.0;
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      const double x = inputs[k][i];
      work[k][i] = x + epsilon;
      const double fp = evaluate(fn, work, nullptr);
      work[k][i] = x - epsilon;
      const double fm = evaluate(fn, work, nullptr);
      work[k][i] = x;
      const double fd = (fp - fm) / (2.0 * epsilon);
      // One-sided slopes of a smooth function differ by O(epsilon).
      const double right = (fp - f0) / epsilon, left = (f0 - fm) / epsilon;
      if (std::abs(right - left) > 1e-3 * std::max(1.0, std::abs(fd))) out.kink = true;
      max_diff = std::max(max_diff, std::abs(analytic[k][i] - fd));
      max_fd = std::max(max_fd, std::abs(fd));
    }
    const double rel = max_diff / std::max(max_fd, 1e-12);
    if (rel >= out.rel_error) {
      out.rel_error = rel;
      out.worst_input = static_cast<int>(k);
      out.worst_scale = max_fd;
    }
  }
  return out;
}

bool GradcheckReport::passed() const {
  return !suites.empty() && std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed(); });
}

std::vector<std::string> gradcheck_suite_names() {
  std::vector<std::string> names;
  for (const auto& s : suites()) names.push_back(s.name);
  return names;
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  require(options.epsilon > 0.0 && options.tolerance > 0.0 && options.trials > 0,
          "gradcheck: epsilon, tolerance and trials must be positive", ErrorKind::kConfig);
  const auto start = std::chrono::steady_clock::now();
  GradcheckReport report;
  const SplitMix64 root = SplitMix64(options.seed).split("gradcheck");
  for (const auto& suite : suites()) {
    if (!options.filter.empty() && suite.name.find(options.filter) == std::string::npos) continue;
    SuiteResult r;
    r.name = suite.name;
    SplitMix64 rng = root.split(suite.name);
    while (r.trials < options.trials) {
      const Instance inst = suite.make(rng);
      const GradComparison c = compare_gradients(inst.fn, inst.inputs, options.epsilon);
      if (c.kink && inst.kink_prone && r.redrawn < 10 * options.trials) {
        ++r.redrawn;
        continue;
      }
      ++r.trials;
      r.max_rel_error = std::max(r.max_rel_error, c.rel_error);
      if (!(c.rel_error < options.tolerance)) {
        ++r.failures;
        spdlog::warn("gradcheck {}: trial {} input {} rel_error {:.3e} (gradient scale {:.3e})", suite.name, r.trials,
                     c.worst_input, c.rel_error, c.worst_scale);
      }
    }
    report.suites.push_back(r);
  }
  if (report.suites.empty()) fail(ErrorKind::kConfig, "gradcheck: no suite matches '" + options.filter + "'");
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_gradcheck(const GradcheckReport& report) {
  std::ostringstream out;
  char line[160];
  for (const auto& s : report.suites) {
    std::snprintf(line, sizeof(line), "%-14s trials=%d failures=%d redrawn=%d max_rel_error=%.3e %s\n",
                  s.name.c_str(), s.trials, s.failures, s.redrawn, s.max_rel_error, s.passed() ? "PASS" : "FAIL");
    out << line;
  }
  std::snprintf(line, sizeof(line), "overall %s (%.2f s)\n", report.passed() ? "PASS" : "FAIL", report.seconds);
  out << line;
  return out.str();
}

}  // namespace mcdepth
