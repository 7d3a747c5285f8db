// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#include "mcdepth/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "mcdepth/error.hpp"

namespace mcdepth::ad {

namespace {

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d >= 0, "tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tape& tape_of(const Var& a) {
  require(a.valid(), "autodiff: use of an unbound Var");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  require(a.valid() && b.valid(), "autodiff: use of an unbound Var");
  require(a.tape() == b.tape(), "autodiff: operands recorded on different tapes");
  return *a.tape();
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Elementwise unary op: forward f(x), backward g * df(x, y).
template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = f(x[i]);
  const int ia = a.id();
  return tape.record(std::move(y), {ia}, [ia, df](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.upstream(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * df(x[i], y[i]);
  });
}

enum class Broadcast { kNone, kLeftScalar, kRightScalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (a.numel() == 1) return Broadcast::kLeftScalar;
  if (b.numel() == 1) return Broadcast::kRightScalar;
  fail(ErrorKind::kInvalidInput, std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                     " vs " + shape_string(b.shape()));
}

// Binary op with scalar-vs-array support. da/db return the local partials.
template <class F, class DA, class DB>
Var binary(const Var& a, const Var& b, const char* name, F f, DA da, DB db) {
  Tape& tape = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  const Broadcast kind = broadcast_kind(x, z, name);
  const std::vector<int>& shape = kind == Broadcast::kLeftScalar ? z.shape() : x.shape();
  Tensor y(shape);
  const std::size_t n = y.numel();
  const std::size_t sx = x.numel() == 1 && kind == Broadcast::kLeftScalar ? 0 : 1;
  const std::size_t sz = z.numel() == 1 && kind == Broadcast::kRightScalar ? 0 : 1;
  for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i * sx], z[i * sz]);
  const int ia = a.id(), ib = b.id();
  return tape.record(std::move(y), {ia, ib}, [=](Tape& t, int self) {
    const Tensor& g = t.upstream(self);
    const Tensor& x = t.value(ia);
    const Tensor& z = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& gx = t.grad_buffer(ia);
      for (std::size_t i = 0; i < n; ++i) gx[i * sx] += g[i] * da(x[i * sx], z[i * sz]);
    }
    if (t.requires_grad(ib)) {
      Tensor& gz = t.grad_buffer(ib);
      for (std::size_t i = 0; i < n; ++i) gz[i * sz] += g[i] * db(x[i * sx], z[i * sz]);
    }
  });
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(product(shape_) == data_.size(), "tensor: data size does not match shape " +
                                               shape_string(shape_));
}

double Tensor::item() const {
  require(numel() == 1, "tensor: item() on a tensor with " + std::to_string(numel()) + " elements");
  return data_[0];
}

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

const Tensor& Var::value() const {
  require(valid(), "autodiff: use of an unbound Var");
  return tape_->value(id_);
}

const Tensor& Var::grad() const {
  require(valid(), "autodiff: use of an unbound Var");
  return tape_->grad(id_);
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  for (double x : value.data()) {
    require(std::isfinite(x), "autodiff: non-finite leaf value", ErrorKind::kDomain);
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Tensor value, std::vector<int> parents, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (int p : parents) node.requires_grad = node.requires_grad || nodes_[static_cast<std::size_t>(p)].requires_grad;
  node.parents = std::move(parents);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor& Tape::grad_buffer(int id) {
  Node& node = nodes_.at(static_cast<std::size_t>(id));
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape(), 0.0);
    node.has_grad = true;
  }
  return node.grad;
}

const Tensor& Tape::grad(int id) { return grad_buffer(id); }

void Tape::backward(const Var& root) {
  require(root.tape() == this, "backward: root belongs to another tape");
  require(root.numel() == 1, "backward: root must be a scalar, got shape " +
                                 shape_string(root.shape()));
  grad_buffer(root.id())[0] += 1.0;
  for (int id = root.id(); id >= 0; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.has_grad && node.backward) node.backward(*this, id);
  }
}

Var add(const Var& a, const Var& b) {
  return binary(
      a, b, "add", [](double x, double z) { return x + z; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      a, b, "sub", [](double x, double z) { return x - z; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      a, b, "mul", [](double x, double z) { return x * z; }, [](double, double z) { return z; },
      [](double x, double) { return x; });
}

Var div(const Var& a, const Var& b) {
  for (double z : b.value().data()) {
    require(z != 0.0, "div: division by zero", ErrorKind::kDomain);
  }
  return binary(
      a, b, "div", [](double x, double z) { return x / z; },
      [](double, double z) { return 1.0 / z; }, [](double x, double z) { return -x / (z * z); });
}

Var scale(const Var& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(const Var& a, double offset) {
  return unary(
      a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var log(const Var& a) {
  for (double x : a.value().data()) {
    require(x > 0.0, "log: non-positive argument", ErrorKind::kDomain);
  }
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var exp(const Var& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(const Var& a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(const Var& a, double lo, double hi) {
  require(lo <= hi, "clamp: lo must not exceed hi");
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softplus(const Var& a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var sum(const Var& a) {
  Tape& tape = tape_of(a);
  const auto data = a.value().data();
  const double total = std::accumulate(data.begin(), data.end(), 0.0);
  const int ia = a.id();
  return tape.record(Tensor::scalar(total), {ia}, [ia](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const double g = t.upstream(self)[0];
    for (double& x : t.grad_buffer(ia).data()) x += g;
  });
}

Var mean(const Var& a) {
  require(a.numel() > 0, "mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Var reshape(const Var& a, std::vector<int> shape) {
  Tape& tape = tape_of(a);
  require(product(shape) == a.numel(), "reshape: element count mismatch " +
                                           shape_string(a.shape()) + " -> " + shape_string(shape));
  Tensor y(std::move(shape), std::vector<double>(a.value().data().begin(), a.value().data().end()));
  const int ia = a.id();
  return tape.record(std::move(y), {ia}, [ia](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.upstream(self);
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
  });
}

Var masked_select(const Var& a, std::span<const std::uint8_t> mask) {
  Tape& tape = tape_of(a);
  require(mask.size() == a.numel(), "masked_select: mask size does not match tensor");
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) index.push_back(i);
  }
  std::vector<double> picked(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) picked[k] = a.value()[index[k]];
  Tensor y({static_cast<int>(index.size())}, std::move(picked));
  const int ia = a.id();
  return tape.record(std::move(y), {ia}, [ia, index = std::move(index)](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.upstream(self);
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t k = 0; k < index.size(); ++k) gx[index[k]] += g[k];
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride) {
  Tape& tape = tape_of(x, weight);
  require(bias.tape() == &tape, "conv2d: bias recorded on a different tape");
  require(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2");
  const Tensor& in = x.value();
  const Tensor& w = weight.value();
  require(in.rank() == 4 && w.rank() == 4, "conv2d: expected NCHW input and OCkk weight");
  const int n = in.dim(0), c = in.dim(1), h = in.dim(2), wd = in.dim(3);
  const int o = w.dim(0), k = w.dim(2);
  require(w.dim(1) == c, "conv2d: channel mismatch " + shape_string(in.shape()) + " vs " +
                             shape_string(w.shape()));
  require(w.dim(3) == k && k % 2 == 1, "conv2d: kernel must be square with odd size");
  require(bias.numel() == static_cast<std::size_t>(o), "conv2d: bias size must equal out channels");
  const int pad = k / 2;
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (wd + 2 * pad - k) / stride + 1;
  require(ho > 0 && wo > 0, "conv2d: input too small");
  const int rows = c * k * k;
  const int cols_n = ho * wo;

  // im2col per sample; kept for the weight gradient.
  auto columns = std::make_shared<std::vector<RowMat>>(static_cast<std::size_t>(n));
  Tensor out({n, o, ho, wo});
  Eigen::Map<const RowMat> wmat(w.data().data(), o, rows);
  Eigen::Map<const Eigen::VectorXd> bvec(bias.value().data().data(), o);
  for (int s = 0; s < n; ++s) {
    RowMat& col = (*columns)[static_cast<std::size_t>(s)];
    col.setZero(rows, cols_n);
    const double* src = in.data().data() + static_cast<std::size_t>(s) * c * h * wd;
    for (int ch = 0; ch < c; ++ch) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          double* dst = col.data() + static_cast<std::size_t>((ch * k + ky) * k + kx) * cols_n;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            const double* row = src + (static_cast<std::size_t>(ch) * h + iy) * wd;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < wd) dst[oy * wo + ox] = row[ix];
            }
          }
        }
      }
    }
    Eigen::Map<RowMat> res(out.data().data() + static_cast<std::size_t>(s) * o * cols_n, o, cols_n);
    res.noalias() = wmat * col;
    res.colwise() += bvec;
  }

  const int ix_id = x.id(), iw = weight.id(), ib = bias.id();
  return tape.record(std::move(out), {ix_id, iw, ib},
                     [=](Tape& t, int self) {
                       const Tensor& g = t.upstream(self);
                       const Tensor& w = t.value(iw);
                       Eigen::Map<const RowMat> wmat(w.data().data(), o, rows);
                       const bool need_x = t.requires_grad(ix_id);
                       const bool need_w = t.requires_grad(iw);
                       const bool need_b = t.requires_grad(ib);
                       RowMat gcol;
                       for (int s = 0; s < n; ++s) {
                         Eigen::Map<const RowMat> gs(
                             g.data().data() + static_cast<std::size_t>(s) * o * cols_n, o, cols_n);
                         if (need_w) {
                           Eigen::Map<RowMat> gw(t.grad_buffer(iw).data().data(), o, rows);
                           gw.noalias() += gs * (*columns)[static_cast<std::size_t>(s)].transpose();
                         }
                         if (need_b) {
                           Eigen::Map<Eigen::VectorXd> gb(t.grad_buffer(ib).data().data(), o);
                           gb += gs.rowwise().sum();
                         }
                         if (!need_x) continue;
                         gcol.noalias() = wmat.transpose() * gs;
                         double* dst = t.grad_buffer(ix_id).data().data() +
                                       static_cast<std::size_t>(s) * c * h * wd;
                         for (int ch = 0; ch < c; ++ch) {
                           for (int ky = 0; ky < k; ++ky) {
                             for (int kx = 0; kx < k; ++kx) {
                               const double* src =
                                   gcol.data() + static_cast<std::size_t>((ch * k + ky) * k + kx) * cols_n;
                               for (int oy = 0; oy < ho; ++oy) {
                                 const int iy = oy * stride - pad + ky;
                                 if (iy < 0 || iy >= h) continue;
                                 double* row = dst + (static_cast<std::size_t>(ch) * h + iy) * wd;
                                 for (int ox = 0; ox < wo; ++ox) {
                                   const int ix = ox * stride - pad + kx;
                                   if (ix >= 0 && ix < wd) row[ix] += src[oy * wo + ox];
                                 }
                               }
                             }
                           }
                         }
                       }
                     });
}

Var upsample2x(const Var& x) {
  Tape& tape = tape_of(x);
  const Tensor& in = x.value();
  require(in.rank() == 4, "upsample2x: expected NCHW input");
  const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
  Tensor out({n, c, 2 * h, 2 * w});
  for (int p = 0; p < n * c; ++p) {
    const double* src = in.data().data() + static_cast<std::size_t>(p) * h * w;
    double* dst = out.data().data() + static_cast<std::size_t>(p) * 4 * h * w;
    for (int y = 0; y < 2 * h; ++y) {
      for (int xx = 0; xx < 2 * w; ++xx) dst[y * 2 * w + xx] = src[(y / 2) * w + xx / 2];
    }
  }
  const int ia = x.id();
  return tape.record(std::move(out), {ia}, [=](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.upstream(self);
    Tensor& gx = t.grad_buffer(ia);
    for (int p = 0; p < n * c; ++p) {
      const double* src = g.data().data() + static_cast<std::size_t>(p) * 4 * h * w;
      double* dst = gx.data().data() + static_cast<std::size_t>(p) * h * w;
      for (int y = 0; y < 2 * h; ++y) {
        for (int xx = 0; xx < 2 * w; ++xx) dst[(y / 2) * w + xx / 2] += src[y * 2 * w + xx];
      }
    }
  });
}

}  // namespace mcdepth::ad
