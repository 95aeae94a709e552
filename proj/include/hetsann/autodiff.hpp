// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation in execution order, so node ids are already
// a topological order: backward() walks ids from the loss downwards and each
// node's rule runs once. Gradients accumulate into parents. A tape is meant
// to be rebuilt per forward pass and consumed by a single backward().
//
//   Tape tape;
//   Var w = tape.leaf(W, /*requires_grad=*/true);
//   Var loss = sum(square(matmul(w, tape.constant(x))));
//   tape.backward(loss);
//   const Tensor& dw = tape.grad(w);

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetsann/error.hpp"
#include "hetsann/tensor.hpp"

namespace hetsann {

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

namespace kernels {

// C = A * B
inline Tensor mm(const Tensor& a, const Tensor& b) {
  Tensor c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.data().data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data().data() + k * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

// C = A^T * B
inline Tensor mm_tn(const Tensor& a, const Tensor& b) {
  Tensor c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* brow = b.data().data() + k * n;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* crow = c.data().data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

// C = A * B^T
inline Tensor mm_nt(const Tensor& a, const Tensor& b) {
  Tensor c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  }
  return c;
}

inline Tensor transpose(const Tensor& a) {
  Tensor t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

}  // namespace kernels

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false, std::string name = "leaf") {
    check_finite(value, name);
    nodes_.push_back(Node{std::move(value), {}, false, requires_grad, {}, std::move(name)});
    return {this, nodes_.size() - 1};
  }

  Var constant(Tensor value) { return leaf(std::move(value), false, "constant"); }

  /// Appends an op result. The backward rule is dropped when no input needs
  /// a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn, const char* op) {
    check_finite(value, op);
    bool needs = false;
    for (const Var& v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
    return push(std::move(value), needs, needs ? std::move(fn) : BackwardFn{}, op);
  }

  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn, const char* op) {
    check_finite(value, op);
    bool needs = false;
    for (const Var& v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
    return push(std::move(value), needs, needs ? std::move(fn) : BackwardFn{}, op);
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

  /// Gradient of the last backward() target w.r.t. v; zeros if v was not reached.
  Tensor grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (!n.has_grad) return Tensor(n.value.rows(), n.value.cols());
    return n.grad;
  }

  /// Adds g into the gradient of v (used by backward rules).
  void accumulate(std::size_t id, const Tensor& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
      return;
    }
    auto& d = n.grad.data();
    const auto& s = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  }

  void backward(Var loss) {
    if (consumed_) throw std::logic_error("backward: tape already consumed");
    const Tensor& lv = value(loss);
    if (lv.size() != 1) throw ShapeError("backward: loss must be scalar, got " + lv.shape_string());
    consumed_ = true;
    if (!nodes_[loss.id].requires_grad) return;
    nodes_[loss.id].grad = Tensor(lv.rows(), lv.cols(), 1.0);
    nodes_[loss.id].has_grad = true;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.has_grad || !n.backward) continue;
      n.backward(*this, n.grad);
      if (!n.grad.all_finite()) throw NumericError("non-finite gradient flowing out of '" + n.name + "'");
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    std::string name;
  };

  static void check_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw NumericError("non-finite value produced by '" + what + "' " + t.shape_string());
  }

  Var push(Tensor value, bool needs, BackwardFn fn, const char* op) {
    nodes_.push_back(Node{std::move(value), {}, false, needs, std::move(fn), op});
    return {this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

namespace detail {

inline void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw std::invalid_argument("vars from different tapes");
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

inline Tensor map(const Tensor& x, auto&& f) {
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return y;
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  detail::require_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) {
    throw ShapeError("matmul: " + A.shape_string() + " x " + B.shape_string());
  }
  return a.tape->record(kernels::mm(A, B), {a, b},
                        [a, b](Tape& t, const Tensor& g) {
                          if (t.requires_grad(a)) t.accumulate(a.id, kernels::mm_nt(g, b.value()));
                          if (t.requires_grad(b)) t.accumulate(b.id, kernels::mm_tn(a.value(), g));
                        },
                        "matmul");
}

inline Var transpose(Var a) {
  return a.tape->record(kernels::transpose(a.value()), {a},
                        [a](Tape& t, const Tensor& g) { t.accumulate(a.id, kernels::transpose(g)); }, "transpose");
}

inline Var add(Var a, Var b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a.value(), b.value(), "add");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  return a.tape->record(std::move(y), {a, b},
                        [a, b](Tape& t, const Tensor& g) {
                          t.accumulate(a.id, g);
                          t.accumulate(b.id, g);
                        },
                        "add");
}

inline Var sub(Var a, Var b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a.value(), b.value(), "sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return a.tape->record(std::move(y), {a, b},
                        [a, b](Tape& t, const Tensor& g) {
                          t.accumulate(a.id, g);
                          if (t.requires_grad(b)) t.accumulate(b.id, detail::map(g, [](double v) { return -v; }));
                        },
                        "sub");
}

/// Elementwise (Hadamard) product.
inline Var mul(Var a, Var b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a.value(), b.value(), "mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return a.tape->record(std::move(y), {a, b},
                        [a, b](Tape& t, const Tensor& g) {
                          if (t.requires_grad(a)) {
                            Tensor ga = g;
                            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= b.value()[i];
                            t.accumulate(a.id, ga);
                          }
                          if (t.requires_grad(b)) {
                            Tensor gb = g;
                            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= a.value()[i];
                            t.accumulate(b.id, gb);
                          }
                        },
                        "mul");
}

inline Var scale(Var a, double s) {
  return a.tape->record(detail::map(a.value(), [s](double v) { return s * v; }), {a},
                        [a, s](Tape& t, const Tensor& g) {
                          t.accumulate(a.id, detail::map(g, [s](double v) { return s * v; }));
                        },
                        "scale");
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return scale(a, -1.0); }

/// x (n x d) plus a 1 x d row broadcast over every row.
inline Var add_row(Var x, Var row) {
  detail::require_same_tape(x, row);
  const Tensor& X = x.value();
  const Tensor& R = row.value();
  if (R.rows() != 1 || R.cols() != X.cols()) {
    throw ShapeError("add_row: " + X.shape_string() + " + " + R.shape_string());
  }
  Tensor y = X;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += R[j];
  }
  return x.tape->record(std::move(y), {x, row},
                        [x, row](Tape& t, const Tensor& g) {
                          t.accumulate(x.id, g);
                          if (t.requires_grad(row)) {
                            Tensor gr(1, g.cols());
                            for (std::size_t i = 0; i < g.rows(); ++i) {
                              for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
                            }
                            t.accumulate(row.id, gr);
                          }
                        },
                        "add_row");
}

/// x (n x d) scaled row-wise by an n x 1 column.
inline Var mul_col(Var x, Var col) {
  detail::require_same_tape(x, col);
  const Tensor& X = x.value();
  const Tensor& C = col.value();
  if (C.cols() != 1 || C.rows() != X.rows()) {
    throw ShapeError("mul_col: " + X.shape_string() + " * " + C.shape_string());
  }
  Tensor y = X;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) *= C[i];
  }
  return x.tape->record(std::move(y), {x, col},
                        [x, col](Tape& t, const Tensor& g) {
                          const Tensor& X = x.value();
                          const Tensor& C = col.value();
                          if (t.requires_grad(x)) {
                            Tensor gx = g;
                            for (std::size_t i = 0; i < gx.rows(); ++i) {
                              for (std::size_t j = 0; j < gx.cols(); ++j) gx(i, j) *= C[i];
                            }
                            t.accumulate(x.id, gx);
                          }
                          if (t.requires_grad(col)) {
                            Tensor gc(C.rows(), 1);
                            for (std::size_t i = 0; i < X.rows(); ++i) {
                              double s = 0.0;
                              for (std::size_t j = 0; j < X.cols(); ++j) s += g(i, j) * X(i, j);
                              gc[i] = s;
                            }
                            t.accumulate(col.id, gc);
                          }
                        },
                        "mul_col");
}

/// Per-row inner product of two n x d matrices, giving n x 1.
inline Var row_dot(Var a, Var b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a.value(), b.value(), "row_dot");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  Tensor y(A.rows(), 1);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < A.cols(); ++j) s += A(i, j) * B(i, j);
    y[i] = s;
  }
  return a.tape->record(std::move(y), {a, b},
                        [a, b](Tape& t, const Tensor& g) {
                          auto scaled = [&g](const Tensor& m) {
                            Tensor out = m;
                            for (std::size_t i = 0; i < out.rows(); ++i) {
                              for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= g[i];
                            }
                            return out;
                          };
                          if (t.requires_grad(a)) t.accumulate(a.id, scaled(b.value()));
                          if (t.requires_grad(b)) t.accumulate(b.id, scaled(a.value()));
                        },
                        "row_dot");
}

/// Concatenation along rows (axis 0) or columns (axis 1).
inline Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  Tape* tape = parts.front().tape;
  std::size_t rows = 0;
  std::size_t cols = 0;
  const Tensor& first = parts.front().value();
  for (const Var& p : parts) {
    detail::require_same_tape(parts.front(), p);
    const Tensor& v = p.value();
    if (axis == 0) {
      if (v.cols() != first.cols()) throw ShapeError("concat rows: column mismatch");
      rows += v.rows();
      cols = v.cols();
    } else {
      if (v.rows() != first.rows()) throw ShapeError("concat cols: row mismatch");
      cols += v.cols();
      rows = v.rows();
    }
  }
  Tensor y(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < v.rows(); ++i) {
      for (std::size_t j = 0; j < v.cols(); ++j) {
        if (axis == 0) {
          y(offset + i, j) = v(i, j);
        } else {
          y(i, offset + j) = v(i, j);
        }
      }
    }
    offset += axis == 0 ? v.rows() : v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape->record(std::move(y), std::span<const Var>(inputs),
                      [inputs, axis](Tape& t, const Tensor& g) {
                        std::size_t off = 0;
                        for (const Var& p : inputs) {
                          const std::size_t r = p.rows();
                          const std::size_t c = p.cols();
                          if (t.requires_grad(p)) {
                            Tensor gp(r, c);
                            for (std::size_t i = 0; i < r; ++i) {
                              for (std::size_t j = 0; j < c; ++j) {
                                gp(i, j) = axis == 0 ? g(off + i, j) : g(i, off + j);
                              }
                            }
                            t.accumulate(p.id, gp);
                          }
                          off += axis == 0 ? r : c;
                        }
                      },
                      "concat");
}

inline Var concat(std::initializer_list<Var> parts, int axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

/// Half-open range [begin, end) along rows (axis 0) or columns (axis 1).
inline Var slice(Var x, int axis, std::size_t begin, std::size_t end) {
  const Tensor& X = x.value();
  const std::size_t extent = axis == 0 ? X.rows() : X.cols();
  if ((axis != 0 && axis != 1) || begin > end || end > extent) {
    throw ShapeError("slice: bad range [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                     X.shape_string());
  }
  const std::size_t r = axis == 0 ? end - begin : X.rows();
  const std::size_t c = axis == 1 ? end - begin : X.cols();
  Tensor y(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) y(i, j) = axis == 0 ? X(begin + i, j) : X(i, begin + j);
  }
  return x.tape->record(std::move(y), {x},
                        [x, axis, begin](Tape& t, const Tensor& g) {
                          Tensor gx(x.rows(), x.cols());
                          for (std::size_t i = 0; i < g.rows(); ++i) {
                            for (std::size_t j = 0; j < g.cols(); ++j) {
                              if (axis == 0) {
                                gx(begin + i, j) = g(i, j);
                              } else {
                                gx(i, begin + j) = g(i, j);
                              }
                            }
                          }
                          t.accumulate(x.id, gx);
                        },
                        "slice");
}

inline Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape->record(Tensor::scalar(s), {x},
                        [x](Tape& t, const Tensor& g) { t.accumulate(x.id, Tensor(x.rows(), x.cols(), g[0])); },
                        "sum");
}

inline Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ShapeError("mean of empty tensor");
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const double inv = 1.0 / static_cast<double>(n);
  return x.tape->record(Tensor::scalar(s * inv), {x},
                        [x, inv](Tape& t, const Tensor& g) {
                          t.accumulate(x.id, Tensor(x.rows(), x.cols(), g[0] * inv));
                        },
                        "mean");
}

inline Var square(Var x) {
  return x.tape->record(detail::map(x.value(), [](double v) { return v * v; }), {x},
                        [x](Tape& t, const Tensor& g) {
                          Tensor gx = g;
                          for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= 2.0 * x.value()[i];
                          t.accumulate(x.id, gx);
                        },
                        "square");
}

/// max(x, slope * x); the derivative at exactly 0 is taken to be slope.
inline Var leaky_relu(Var x, double slope) {
  return x.tape->record(detail::map(x.value(), [slope](double v) { return v > 0.0 ? v : slope * v; }), {x},
                        [x, slope](Tape& t, const Tensor& g) {
                          Tensor gx = g;
                          for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= x.value()[i] > 0.0 ? 1.0 : slope;
                          t.accumulate(x.id, gx);
                        },
                        "leaky_relu");
}

/// ELU with alpha = 1.
inline Var elu(Var x) {
  return x.tape->record(detail::map(x.value(), [](double v) { return v > 0.0 ? v : std::expm1(v); }), {x},
                        [x](Tape& t, const Tensor& g) {
                          Tensor gx = g;
                          for (std::size_t i = 0; i < gx.size(); ++i) {
                            const double v = x.value()[i];
                            gx[i] *= v > 0.0 ? 1.0 : std::exp(v);
                          }
                          t.accumulate(x.id, gx);
                        },
                        "elu");
}

/// Softmax of an E x 1 score column within groups sharing a segment id.
/// Every segment in [0, num_segments) must be non-empty.
inline Var segment_softmax(Var scores, const std::vector<std::size_t>& segments, std::size_t num_segments) {
  const Tensor& s = scores.value();
  if (s.cols() != 1 || s.rows() != segments.size()) {
    throw ShapeError("segment_softmax: scores " + s.shape_string() + " vs " + std::to_string(segments.size()) +
                     " segment ids");
  }
  std::vector<double> seg_max(num_segments, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> seg_size(num_segments, 0);
  for (std::size_t e = 0; e < segments.size(); ++e) {
    const std::size_t k = segments[e];
    if (k >= num_segments) throw ShapeError("segment_softmax: segment id out of range");
    seg_max[k] = std::max(seg_max[k], s[e]);
    ++seg_size[k];
  }
  for (std::size_t k = 0; k < num_segments; ++k) {
    if (seg_size[k] == 0) throw std::logic_error("segment_softmax: empty segment " + std::to_string(k));
  }
  Tensor y(s.rows(), 1);
  std::vector<double> denom(num_segments, 0.0);
  for (std::size_t e = 0; e < segments.size(); ++e) {
    y[e] = std::exp(s[e] - seg_max[segments[e]]);
    denom[segments[e]] += y[e];
  }
  for (std::size_t e = 0; e < segments.size(); ++e) y[e] /= denom[segments[e]];

  Tensor saved = y;
  return scores.tape->record(std::move(y), {scores},
                             [scores, y = std::move(saved), segments, num_segments](Tape& t, const Tensor& g) {
                               std::vector<double> dot(num_segments, 0.0);
                               for (std::size_t e = 0; e < segments.size(); ++e) dot[segments[e]] += y[e] * g[e];
                               Tensor gx(y.rows(), 1);
                               for (std::size_t e = 0; e < segments.size(); ++e) {
                                 gx[e] = y[e] * (g[e] - dot[segments[e]]);
                               }
                               t.accumulate(scores.id, gx);
                             },
                             "segment_softmax");
}

/// Sums rows of x (E x d) into num_segments output rows by segment id.
inline Var segment_sum(Var x, const std::vector<std::size_t>& segments, std::size_t num_segments) {
  const Tensor& X = x.value();
  if (X.rows() != segments.size()) throw ShapeError("segment_sum: row/segment count mismatch");
  Tensor y(num_segments, X.cols());
  for (std::size_t e = 0; e < segments.size(); ++e) {
    if (segments[e] >= num_segments) throw ShapeError("segment_sum: segment id out of range");
    auto dst = y.row(segments[e]);
    auto src = X.row(e);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
  }
  return x.tape->record(std::move(y), {x},
                        [x, segments](Tape& t, const Tensor& g) {
                          Tensor gx(x.rows(), x.cols());
                          for (std::size_t e = 0; e < segments.size(); ++e) {
                            auto src = g.row(segments[e]);
                            std::copy(src.begin(), src.end(), gx.row(e).begin());
                          }
                          t.accumulate(x.id, gx);
                        },
                        "segment_sum");
}

/// Row e of the result is row index[e] of x.
inline Var gather_rows(Var x, const std::vector<std::size_t>& index) {
  const Tensor& X = x.value();
  Tensor y(index.size(), X.cols());
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] >= X.rows()) throw ShapeError("gather_rows: index out of range");
    auto src = X.row(index[e]);
    std::copy(src.begin(), src.end(), y.row(e).begin());
  }
  return x.tape->record(std::move(y), {x},
                        [x, index](Tape& t, const Tensor& g) {
                          Tensor gx(x.rows(), x.cols());
                          for (std::size_t e = 0; e < index.size(); ++e) {
                            auto dst = gx.row(index[e]);
                            auto src = g.row(e);
                            for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                          }
                          t.accumulate(x.id, gx);
                        },
                        "gather_rows");
}

/// Inverted dropout: each element is zeroed with probability rate and the
/// survivors are scaled by 1 / (1 - rate). Identity when not training.
inline Var dropout(Var x, double rate, std::mt19937_64& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution keep(1.0 - rate);
  Tensor mask(x.rows(), x.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? keep_scale : 0.0;
  Tensor y = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  return x.tape->record(std::move(y), {x},
                        [x, mask = std::move(mask)](Tape& t, const Tensor& g) {
                          Tensor gx = g;
                          for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= mask[i];
                          t.accumulate(x.id, gx);
                        },
                        "dropout");
}

/// Mean over the selected rows of -log softmax(logits)[label].
inline Var softmax_cross_entropy(Var logits, const std::vector<int>& labels, const std::vector<std::size_t>& rows) {
  const Tensor& L = logits.value();
  if (labels.size() != L.rows()) throw ShapeError("softmax_cross_entropy: label count mismatch");
  if (rows.empty()) throw std::invalid_argument("softmax_cross_entropy: empty mask");
  Tensor probs(rows.size(), L.cols());
  double loss = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    const int y = labels.at(i);
    if (y < 0 || static_cast<std::size_t>(y) >= L.cols()) {
      throw std::invalid_argument("softmax_cross_entropy: row " + std::to_string(i) + " has no valid label");
    }
    auto row = L.row(i);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    const double log_z = m + std::log(z);
    for (std::size_t c = 0; c < row.size(); ++c) probs(k, c) = std::exp(row[c] - log_z);
    loss += log_z - row[static_cast<std::size_t>(y)];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  return logits.tape->record(Tensor::scalar(loss * inv), {logits},
                             [logits, labels, rows, probs = std::move(probs), inv](Tape& t, const Tensor& g) {
                               Tensor gl(logits.rows(), logits.cols());
                               for (std::size_t k = 0; k < rows.size(); ++k) {
                                 const std::size_t i = rows[k];
                                 for (std::size_t c = 0; c < gl.cols(); ++c) {
                                   const double onehot = static_cast<int>(c) == labels[i] ? 1.0 : 0.0;
                                   gl(i, c) += g[0] * inv * (probs(k, c) - onehot);
                                 }
                               }
                               t.accumulate(logits.id, gl);
                             },
                             "softmax_cross_entropy");
}

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) per coordinate.
inline Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps = 1e-5) {
  Tensor g(x.rows(), x.cols());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

}  // namespace hetsann
