#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "genreg/tensor.hpp"

namespace genreg {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Linear record of operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so insertion order is a
/// topological order. Operations whose inputs do not require gradients are
/// recorded without a backward closure. A Tape is single-owner and not
/// thread safe.
class Tape {
 public:
  /// Receives the gradient of the loss with respect to the node's output.
  using BackwardFn = std::function<void(Tape&, const Tensor&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value);
  /// Leaf whose gradient tracking follows `value.requires_grad()`.
  Var input(Tensor value);

  /// Append an operation result. `fn` is dropped when no input requires grad.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Accumulation buffer for the gradient of `v` during backward.
  std::span<double> grad_buffer(Var v);

  /// Reverse sweep from a scalar loss. Previous gradients are discarded.
  void backward(Var loss);

  /// Gradient of the last backward's loss with respect to `v`; zeros when
  /// `v` does not reach the loss.
  Tensor grad(Var v) const;

 private:
  struct Node {
    Tensor value;
    BackwardFn backward;
    bool requires_grad = false;
  };

  void check(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// Elementwise arithmetic. Binary operations require equal element counts
// and take the shape of the first operand.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var square(Var a);
Var exp(Var a);
Var log(Var a);
/// Multiply by a constant tensor of the same element count.
Var mask_mul(Var a, const Tensor& mask);

// Reductions.
Var sum(Var a);
Var mean(Var a);
/// Sum over all but the leading axis: (N, ...) -> (N, 1).
Var sum_rows(Var a);
/// Euclidean norm over all but the leading axis: (N, ...) -> (N, 1).
/// The subgradient at a zero row is taken as zero.
Var row_norm(Var a);
/// Scalar sum(a * c) for a constant c.
Var inner_const(Var a, const Tensor& c);

// Activations.
Var leaky_relu(Var a, double slope);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);

// Structural.
Var reshape(Var a, Shape shape);
/// Columns [begin, end) of a (N, F) matrix.
Var slice_cols(Var a, std::size_t begin, std::size_t end);

// Linear maps.
/// (n, k) x (k, m) -> (n, m)
Var matmul(Var a, Var b);
/// x (N, in), weight (out, in), optional bias (out) -> (N, out)
Var linear(Var x, Var weight, std::optional<Var> bias);
/// x (N, Cin, H, W), weight (Cout, Cin, k, k), optional bias (Cout).
Var conv2d(Var x, Var weight, std::optional<Var> bias, std::size_t stride, std::size_t pad);
/// x (N, Cin, H, W), weight (Cin, Cout, k, k), optional bias (Cout), output
/// spatial extent given explicitly. This is the input-gradient of conv2d
/// with the same weight, stride and padding.
Var conv_transpose2d(Var x, Var weight, std::optional<Var> bias, std::size_t stride,
                     std::size_t pad, std::size_t out_h, std::size_t out_w);

/// Output extent of a transposed convolution: (in - 1) * stride - 2 * pad + kernel.
std::size_t conv_transpose_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                  std::size_t pad);

}  // namespace genreg
