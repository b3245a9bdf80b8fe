#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "netdemix/types.hpp"

namespace netdemix {

class Tape;
class ParameterStore;

/// Handle to a matrix recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recorder for the small set of matrix ops the models need.
/// Nodes are appended in evaluation order, so reverse order is topological.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  Var constant(Matrix value);
  /// Leaf whose gradient is kept on the tape (see grad()).
  Var input(Matrix value);
  /// Leaf bound to a stored parameter; backward() adds its gradient to the store.
  Var parameter(ParameterStore& store, const std::string& name);

  /// Records an op result. `backward` is dropped when no input requires grad.
  Var record(Matrix value, std::span<const Var> inputs, Backward backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Gradient of the last backward() root w.r.t. `v`; zeros when unreached.
  Matrix grad(Var v) const;

  /// Adds `g` into the gradient slot of `v` (no-op for constants).
  void accumulate(Var v, const Matrix& g);

  /// Seeds d(root)/d(root) = `seed` and propagates. `root` must be 1x1.
  void backward(Var root, double seed = 1.0);

  /// Smallest distance of any non-smooth op argument to its kink seen so far
  /// (ReLU/hinge pre-activations, top-k score gaps). Finite-difference checks
  /// with step h are only meaningful when this exceeds h.
  double min_margin() const noexcept { return min_margin_; }
  void note_margin(double m) noexcept {
    if (m < min_margin_) min_margin_ = m;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    ParameterStore* store = nullptr;
    std::string param_name;
  };

  std::vector<Node> nodes_;
  double min_margin_ = std::numeric_limits<double>::infinity();
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

/// Primitive differentiable ops. All shapes are checked and mismatches raise
/// DimensionError.
namespace ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// a (R x C) + bias (1 x C) broadcast over rows.
Var add_row_bias(Var a, Var bias);
/// Row r of `a` multiplied by g(r); g is R x 1.
Var scale_rows(Var a, Var g);
Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
/// max(a, 0) elementwise; identical to relu, kept separate for readability
/// where it is a penalty rather than an activation.
Var positive_part(Var a);
/// 1 x 1 sum of all entries.
Var sum(Var a);
Var mean(Var a);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, Index start, Index count);
/// Rows of `a` at `idx`, in the given order.
Var gather_rows(Var a, std::span<const Index> idx);
/// Inverse placement: an n-row matrix with row idx[k] = a.row(k), zeros elsewhere.
Var scatter_rows(Var a, std::span<const Index> idx, Index n);
/// Column-major reinterpretation into rows x cols.
Var reshape(Var a, Index rows, Index cols);
Var transpose(Var a);

}  // namespace ops

}  // namespace netdemix
