// Copyright 2026 The mcdepth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mcdepth::ad {

/// Dense row-major array of doubles. Image batches use NCHW.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> data);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const std::vector<int>& shape() const { return shape_; }
  int dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double item() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<int>& shape);

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  /// Gradient after Tape::backward; zeros when the node was not reached.
  const Tensor& grad() const;
  double item() const { return value().item(); }
  const std::vector<int>& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Records operations in creation order, which is a topological order, and
/// replays their backward rules in reverse. Single-threaded.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Seeds d(root)/d(root) = 1 and accumulates gradients into every node
  /// that depends on a requires-grad leaf. Calling it twice accumulates.
  void backward(const Var& root);

  const Tensor& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  const Tensor& grad(int id);
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Op-author interface.
  Var record(Tensor value, std::vector<int> parents, BackwardFn backward);
  /// Gradient buffer of `id`, allocated as zeros on first use.
  Tensor& grad_buffer(int id);
  const Tensor& upstream(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<int> parents;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Binary ops accept equal shapes, or one operand with a single element
// (scalar-vs-array); no other broadcasting.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
/// Throws ErrorKind::kDomain if any element is <= 0.
Var log(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
/// Backward passes the gradient where lo <= x <= hi (boundary inclusive).
Var clamp(const Var& a, double lo, double hi);
Var relu(const Var& a);
/// log(1 + e^x), computed stably.
Var softplus(const Var& a);
Var reshape(const Var& a, std::vector<int> shape);
/// Elements where mask != 0, flattened in row-major order.
Var masked_select(const Var& a, std::span<const std::uint8_t> mask);

/// x: [N, C, H, W], weight: [O, C, k, k], bias: [O]; zero padding k/2,
/// stride 1 or 2.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride);
/// Nearest-neighbour 2x upsampling of an NCHW tensor.
Var upsample2x(const Var& x);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

}  // namespace mcdepth::ad
