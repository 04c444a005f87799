// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared node. Operations executed while a
// Tape is active (see TapeScope) and that touch at least one tensor with
// requires_grad() are recorded in execution order; backward() replays the tape
// in reverse. Outside a TapeScope nothing is recorded, which is how inference
// runs.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace adacred {

#ifdef ADACRED_DOUBLE
using Real = double;
#else
using Real = float;
#endif

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // lazily allocated
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real fill, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<const Real> data() const { return node_->value; }
  std::span<Real> mutable_data() { return node_->value; }
  Real item() const;
  Real at(std::size_t flat_index) const { return node_->value.at(flat_index); }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  void set_requires_grad(bool flag);

  // Gradient buffer; zero-filled on first access.
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  void zero_grad();

  bool all_finite() const;

  // Deep copy of value; the copy is a fresh leaf.
  Tensor clone(bool requires_grad = false) const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_op_result(Shape, std::vector<Real>, std::vector<Tensor>,
                               std::function<void(detail::Node&)>);

  std::shared_ptr<detail::Node> node_;
};

/// Ordered record of primitive applications. Nodes appear after their inputs.
class Tape {
 public:
  void record(std::shared_ptr<detail::Node> node);
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  void reset();

 private:
  friend void backward(const Tensor& loss, Tape& tape);
  std::vector<std::shared_ptr<detail::Node>> nodes_;
  bool consumed_ = false;
};

/// Activates a tape for the current thread for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Builds the output of a primitive. When a tape is active and any input
/// requires a gradient, the node is recorded with `backward_fn`, which must
/// read node.grad and accumulate into the inputs that require gradients.
Tensor make_op_result(Shape shape, std::vector<Real> value, std::vector<Tensor> inputs,
                      std::function<void(detail::Node&)> backward_fn);

/// Reverse pass from a scalar loss. Each recorded forward may be replayed once;
/// call tape.reset() before recording the next forward.
void backward(const Tensor& loss, Tape& tape);

}  // namespace adacred
