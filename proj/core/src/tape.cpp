#include "netdemix/tape.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "netdemix/errors.hpp"
#include "netdemix/params.hpp"

namespace netdemix {

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}, nullptr, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}, nullptr, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(ParameterStore& store, const std::string& name) {
  nodes_.push_back(Node{store.value(name), {}, true, {}, &store, name});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward backward) {
  bool rg = false;
  for (const Var& v : inputs) {
    if (v.tape() != this) throw InvalidArgument("operands recorded on different tapes");
    rg = rg || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, rg, rg ? std::move(backward) : Backward{}, nullptr, {}});
  return Var(this, nodes_.size() - 1);
}

Matrix Tape::grad(Var v) const {
  const auto& n = nodes_.at(v.id());
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  auto& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols())
    throw DimensionError("internal: gradient shape does not match value shape");
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(Var root, double seed) {
  if (root.tape() != this) throw InvalidArgument("backward root from another tape");
  if (root.rows() != 1 || root.cols() != 1) throw DimensionError("backward root must be 1x1");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[root.id()].requires_grad) return;
  nodes_[root.id()].grad = Matrix::Constant(1, 1, seed);
  for (std::size_t k = root.id() + 1; k-- > 0;) {
    auto& n = nodes_[k];
    if (n.grad.size() == 0) continue;
    if (n.backward) {
      // The callback may append to nothing but can touch other nodes' grads;
      // copy the gradient to keep the reference stable.
      const Matrix g = n.grad;
      n.backward(*this, g);
    }
  }
  for (auto& n : nodes_)
    if (n.store && n.grad.size() != 0) n.store->accumulate_grad(n.param_name, n.grad);
}

namespace ops {

namespace {

void require(bool cond, const char* op, const std::string& detail) {
  if (!cond) throw DimensionError(std::string(op) + ": " + detail);
}

std::string shape(const Var& v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op,
          "shape mismatch " + shape(a) + " vs " + shape(b));
}

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw InvalidArgument("operation on an unrecorded Var");
  return *v.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul", shape(a) + " * " + shape(b));
  Tape& t = tape_of(a);
  const std::array in{a, b};
  return t.record(a.value() * b.value(), in, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a.id())) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b.id())) t.accumulate(b, a.value().transpose() * g);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const std::array in{a, b};
  return tape_of(a).record(a.value() + b.value(), in, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const std::array in{a, b};
  return tape_of(a).record(a.value() - b.value(), in, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const std::array in{a, b};
  return tape_of(a).record(a.value().cwiseProduct(b.value()), in,
                           [a, b](Tape& t, const Matrix& g) {
                             if (t.requires_grad(a.id())) t.accumulate(a, g.cwiseProduct(b.value()));
                             if (t.requires_grad(b.id())) t.accumulate(b, g.cwiseProduct(a.value()));
                           });
}

Var scale(Var a, double s) {
  const std::array in{a};
  return tape_of(a).record(s * a.value(), in,
                           [a, s](Tape& t, const Matrix& g) { t.accumulate(a, s * g); });
}

Var add_scalar(Var a, double s) {
  const std::array in{a};
  return tape_of(a).record((a.value().array() + s).matrix(), in,
                           [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var add_row_bias(Var a, Var bias) {
  require(bias.rows() == 1 && bias.cols() == a.cols(), "add_row_bias",
          shape(a) + " + " + shape(bias));
  const std::array in{a, bias};
  Matrix out = a.value().rowwise() + bias.value().row(0);
  return tape_of(a).record(std::move(out), in, [a, bias](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(bias.id())) t.accumulate(bias, g.colwise().sum());
  });
}

Var scale_rows(Var a, Var gate) {
  require(gate.cols() == 1 && gate.rows() == a.rows(), "scale_rows",
          shape(a) + " by " + shape(gate));
  const std::array in{a, gate};
  Matrix out = gate.value().col(0).asDiagonal() * a.value();
  return tape_of(a).record(std::move(out), in, [a, gate](Tape& t, const Matrix& g) {
    if (t.requires_grad(a.id())) t.accumulate(a, gate.value().col(0).asDiagonal() * g);
    if (t.requires_grad(gate.id()))
      t.accumulate(gate, g.cwiseProduct(a.value()).rowwise().sum());
  });
}

Var relu(Var a) {
  Tape& tp = tape_of(a);
  const Matrix& v = a.value();
  if (v.size() > 0) {
    double margin = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < v.size(); ++k) margin = std::min(margin, std::abs(v(k)));
    tp.note_margin(margin);
  }
  const std::array in{a};
  return tp.record(v.cwiseMax(0.0), in, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
  });
}

Var positive_part(Var a) { return relu(a); }

Var sigmoid(Var a) {
  Matrix s = a.value().unaryExpr([](double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  Matrix ds = s.cwiseProduct((1.0 - s.array()).matrix());
  const std::array in{a};
  return tape_of(a).record(std::move(s), in, [a, ds = std::move(ds)](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(ds));
  });
}

Var exp(Var a) {
  const std::array in{a};
  return tape_of(a).record(a.value().array().exp().matrix(), in, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(a.value().array().exp().matrix()));
  });
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw DomainError("log of non-positive entry");
  const std::array in{a};
  return tape_of(a).record(a.value().array().log().matrix(), in, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseQuotient(a.value()));
  });
}

Var square(Var a) {
  const std::array in{a};
  return tape_of(a).record(a.value().cwiseAbs2(), in, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, 2.0 * g.cwiseProduct(a.value()));
  });
}

Var sum(Var a) {
  const std::array in{a};
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().sum()), in,
                           [a](Tape& t, const Matrix& g) {
                             t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
                           });
}

Var mean(Var a) {
  require(a.value().size() > 0, "mean", "empty operand");
  return scale(sum(a), 1.0 / double(a.value().size()));
}

Var concat_cols(Var a, Var b) {
  require(a.rows() == b.rows(), "concat_cols", shape(a) + " | " + shape(b));
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const std::array in{a, b};
  return tape_of(a).record(std::move(out), in, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g.leftCols(a.cols()));
    t.accumulate(b, g.rightCols(b.cols()));
  });
}

Var slice_cols(Var a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols",
          "range out of bounds for " + shape(a));
  const std::array in{a};
  return tape_of(a).record(a.value().middleCols(start, count), in,
                           [a, start, count](Tape& t, const Matrix& g) {
                             Matrix full = Matrix::Zero(a.rows(), a.cols());
                             full.middleCols(start, count) = g;
                             t.accumulate(a, full);
                           });
}

Var gather_rows(Var a, std::span<const Index> idx) {
  std::vector<Index> rows(idx.begin(), idx.end());
  Matrix out(Index(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] >= 0 && rows[k] < a.rows(), "gather_rows", "row index out of range");
    out.row(Index(k)) = a.value().row(rows[k]);
  }
  const std::array in{a};
  return tape_of(a).record(std::move(out), in, [a, rows](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) full.row(rows[k]) += g.row(Index(k));
    t.accumulate(a, full);
  });
}

Var scatter_rows(Var a, std::span<const Index> idx, Index n) {
  require(Index(idx.size()) == a.rows(), "scatter_rows",
          "index count " + std::to_string(idx.size()) + " vs rows " + std::to_string(a.rows()));
  std::vector<Index> rows(idx.begin(), idx.end());
  Matrix out = Matrix::Zero(n, a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] >= 0 && rows[k] < n, "scatter_rows", "row index out of range");
    out.row(rows[k]) = a.value().row(Index(k));
  }
  const std::array in{a};
  return tape_of(a).record(std::move(out), in, [a, rows](Tape& t, const Matrix& g) {
    Matrix back(a.rows(), a.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) back.row(Index(k)) = g.row(rows[k]);
    t.accumulate(a, back);
  });
}

Var reshape(Var a, Index rows, Index cols) {
  require(rows * cols == a.value().size(), "reshape",
          shape(a) + " to " + std::to_string(rows) + "x" + std::to_string(cols));
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  const std::array in{a};
  return tape_of(a).record(std::move(out), in, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Eigen::Map<const Matrix>(g.data(), a.rows(), a.cols()));
  });
}

Var transpose(Var a) {
  const std::array in{a};
  return tape_of(a).record(a.value().transpose(), in, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.transpose());
  });
}

}  // namespace ops

}  // namespace netdemix
