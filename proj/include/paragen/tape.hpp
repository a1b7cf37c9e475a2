// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode autodiff on a flat operation tape. Values are dense Eigen
// matrices; a Var is a cheap handle into the tape. Building ops appends
// nodes, backward() walks the tape once in reverse. Column vectors are
// matrices with one column; scalars are 1x1.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "paragen/errors.hpp"

namespace paragen {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

template <typename S>
class Tape;

template <typename S>
class Var {
 public:
  Var() = default;

  const Mat<S>& value() const { return tape_->value(id_); }
  const Mat<S>& grad() const { return tape_->grad(id_); }
  S scalar() const { return value()(0, 0); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

  Tape<S>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape<S>;
  Var(Tape<S>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<S>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename S>
class Tape {
 public:
  // A node's backward fn receives the tape and the node's own index; it reads
  // grad(self) and accumulates into the grads of its inputs.
  using BackFn = std::function<void(Tape&, std::size_t)>;

  Var<S> leaf(Mat<S> value) { return push(std::move(value), nullptr); }

  Var<S> scalar(S v) {
    Mat<S> m(1, 1);
    m(0, 0) = v;
    return leaf(std::move(m));
  }

  Var<S> push(Mat<S> value, BackFn back) {
    nodes_.push_back(Node{std::move(value), Mat<S>(), std::move(back)});
    return Var<S>(this, nodes_.size() - 1);
  }

  const Mat<S>& value(std::size_t i) const { return nodes_[i].value; }

  // Lazily sized to match the value; untouched grads stay empty so backward
  // can skip whole subgraphs that no gradient reaches.
  Mat<S>& grad(std::size_t i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 && n.value.size() != 0)
      n.grad = Mat<S>::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 and sweeps the tape in reverse. Clears any
  // gradients from a previous sweep first.
  void backward(Var<S> root) {
    if (root.rows() != 1 || root.cols() != 1)
      throw ShapeError("backward: root must be a scalar");
    for (Node& n : nodes_) n.grad.resize(0, 0);
    grad(root.id())(0, 0) = S(1);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (n.back && n.grad.size() != 0) n.back(*this, i);
    }
  }

 private:
  struct Node {
    Mat<S> value;
    Mat<S> grad;
    BackFn back;
  };
  std::vector<Node> nodes_;
};

namespace detail {

template <typename S>
void require_same_tape(const Var<S>& a, const Var<S>& b, const char* op) {
  if (&a.tape() != &b.tape())
    throw Error(std::string(op) + ": operands live on different tapes");
}

template <typename S>
void require_same_shape(const Var<S>& a, const Var<S>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
}

}  // namespace detail

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  detail::require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + ")");
  Tape<S>& t = a.tape();
  Mat<S> y = a.value() * b.value();
  return t.push(std::move(y), [ia = a.id(), ib = b.id()](Tape<S>& tp, std::size_t self) {
    const Mat<S>& g = tp.grad(self);
    tp.grad(ia) += g * tp.value(ib).transpose();
    tp.grad(ib) += tp.value(ia).transpose() * g;
  });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  detail::require_same_tape(a, b, "add");
  detail::require_same_shape(a, b, "add");
  Tape<S>& t = a.tape();
  Mat<S> y = a.value() + b.value();
  return t.push(std::move(y), [ia = a.id(), ib = b.id()](Tape<S>& tp, std::size_t self) {
    const Mat<S>& g = tp.grad(self);
    tp.grad(ia) += g;
    tp.grad(ib) += g;
  });
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  detail::require_same_tape(a, b, "mul");
  detail::require_same_shape(a, b, "mul");
  Tape<S>& t = a.tape();
  Mat<S> y = a.value().cwiseProduct(b.value());
  return t.push(std::move(y), [ia = a.id(), ib = b.id()](Tape<S>& tp, std::size_t self) {
    const Mat<S>& g = tp.grad(self);
    tp.grad(ia) += g.cwiseProduct(tp.value(ib));
    tp.grad(ib) += g.cwiseProduct(tp.value(ia));
  });
}

template <typename S>
Var<S> scale(Var<S> a, S k) {
  Tape<S>& t = a.tape();
  Mat<S> y = a.value() * k;
  return t.push(std::move(y), [ia = a.id(), k](Tape<S>& tp, std::size_t self) {
    tp.grad(ia) += tp.grad(self) * k;
  });
}

// Adds a column vector to every column of a matrix.
template <typename S>
Var<S> add_colwise(Var<S> m, Var<S> v) {
  detail::require_same_tape(m, v, "add_colwise");
  if (v.cols() != 1 || v.rows() != m.rows())
    throw ShapeError("add_colwise: vector must be " + std::to_string(m.rows()) + "x1");
  Tape<S>& t = m.tape();
  Mat<S> y = m.value();
  y.colwise() += v.value().col(0);
  return t.push(std::move(y), [im = m.id(), iv = v.id()](Tape<S>& tp, std::size_t self) {
    const Mat<S>& g = tp.grad(self);
    tp.grad(im) += g;
    tp.grad(iv) += g.rowwise().sum();
  });
}

template <typename S>
Var<S> sigmoid(Var<S> a) {
  Tape<S>& t = a.tape();
  // Branch on sign so neither exp overflows.
  const auto& x = a.value().array();
  Mat<S> y = (x >= S(0))
                 .select(S(1) / (S(1) + (-x).exp()), x.exp() / (S(1) + x.exp()))
                 .matrix();
  return t.push(std::move(y), [ia = a.id()](Tape<S>& tp, std::size_t self) {
    const auto& y = tp.value(self).array();
    tp.grad(ia) += (tp.grad(self).array() * y * (S(1) - y)).matrix();
  });
}

template <typename S>
Var<S> tanh(Var<S> a) {
  Tape<S>& t = a.tape();
  Mat<S> y = a.value().array().tanh().matrix();
  return t.push(std::move(y), [ia = a.id()](Tape<S>& tp, std::size_t self) {
    const auto& y = tp.value(self).array();
    tp.grad(ia) += (tp.grad(self).array() * (S(1) - y * y)).matrix();
  });
}

template <typename S>
Var<S> relu(Var<S> a) {
  Tape<S>& t = a.tape();
  Mat<S> y = a.value().cwiseMax(S(0));
  return t.push(std::move(y), [ia = a.id()](Tape<S>& tp, std::size_t self) {
    const auto& x = tp.value(ia).array();
    tp.grad(ia) += (tp.grad(self).array() * (x > S(0)).template cast<S>()).matrix();
  });
}

template <typename S>
Var<S> concat_rows(Var<S> a, Var<S> b) {
  detail::require_same_tape(a, b, "concat_rows");
  if (a.cols() != b.cols()) throw ShapeError("concat_rows: column counts differ");
  Tape<S>& t = a.tape();
  Mat<S> y(a.rows() + b.rows(), a.cols());
  y.topRows(a.rows()) = a.value();
  y.bottomRows(b.rows()) = b.value();
  return t.push(std::move(y),
                [ia = a.id(), ib = b.id(), ra = a.rows()](Tape<S>& tp, std::size_t self) {
                  const Mat<S>& g = tp.grad(self);
                  tp.grad(ia) += g.topRows(ra);
                  tp.grad(ib) += g.bottomRows(g.rows() - ra);
                });
}

template <typename S>
Var<S> concat_cols(Var<S> a, Var<S> b) {
  detail::require_same_tape(a, b, "concat_cols");
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row counts differ");
  Tape<S>& t = a.tape();
  Mat<S> y(a.rows(), a.cols() + b.cols());
  y.leftCols(a.cols()) = a.value();
  y.rightCols(b.cols()) = b.value();
  return t.push(std::move(y),
                [ia = a.id(), ib = b.id(), ca = a.cols()](Tape<S>& tp, std::size_t self) {
                  const Mat<S>& g = tp.grad(self);
                  tp.grad(ia) += g.leftCols(ca);
                  tp.grad(ib) += g.rightCols(g.cols() - ca);
                });
}

template <typename S>
Var<S> slice_rows(Var<S> a, Index start, Index count) {
  if (start < 0 || count < 1 || start + count > a.rows())
    throw ShapeError("slice_rows: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + std::to_string(a.rows()) +
                     " rows");
  Tape<S>& t = a.tape();
  Mat<S> y = a.value().middleRows(start, count);
  return t.push(std::move(y), [ia = a.id(), start, count](Tape<S>& tp, std::size_t self) {
    tp.grad(ia).middleRows(start, count) += tp.grad(self);
  });
}

// Per-row max over columns. Ties route the gradient to the lowest column
// index, matching the argmax below.
template <typename S>
Var<S> rowwise_max(Var<S> a) {
  if (a.cols() < 1) throw ShapeError("rowwise_max: need at least one column");
  Tape<S>& t = a.tape();
  const Mat<S>& x = a.value();
  std::vector<Index> arg(static_cast<std::size_t>(x.rows()));
  Mat<S> y(x.rows(), 1);
  for (Index r = 0; r < x.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < x.cols(); ++c)
      if (x(r, c) > x(r, best)) best = c;
    arg[static_cast<std::size_t>(r)] = best;
    y(r, 0) = x(r, best);
  }
  return t.push(std::move(y),
                [ia = a.id(), arg = std::move(arg)](Tape<S>& tp, std::size_t self) {
                  const Mat<S>& g = tp.grad(self);
                  Mat<S>& ga = tp.grad(ia);
                  for (Index r = 0; r < g.rows(); ++r)
                    ga(r, arg[static_cast<std::size_t>(r)]) += g(r, 0);
                });
}

// Max over a set of equally sized column vectors. Empty sets are an error:
// the max of nothing is undefined.
template <typename S>
Var<S> max_pool_set(const std::vector<Var<S>>& vs) {
  if (vs.empty()) throw ShapeError("max_pool_set: empty set");
  Var<S> m = vs[0];
  for (std::size_t i = 1; i < vs.size(); ++i) m = concat_cols(m, vs[i]);
  return rowwise_max(m);
}

template <typename S>
Var<S> sum(Var<S> a) {
  Tape<S>& t = a.tape();
  Mat<S> y(1, 1);
  y(0, 0) = a.value().sum();
  return t.push(std::move(y), [ia = a.id()](Tape<S>& tp, std::size_t self) {
    tp.grad(ia).array() += tp.grad(self)(0, 0);
  });
}

// Cross entropy between softmax(logits) and a one-hot target. Logits must be
// a column vector with finite entries; returns a scalar. Computed via the
// log-sum-exp shift so large logits do not overflow.
template <typename S>
Var<S> softmax_cross_entropy(Var<S> logits, Index target) {
  if (logits.cols() != 1) throw ShapeError("softmax_cross_entropy: logits must be a column");
  if (target < 0 || target >= logits.rows())
    throw ShapeError("softmax_cross_entropy: target " + std::to_string(target) + " outside [0, " +
                     std::to_string(logits.rows()) + ")");
  if (!logits.value().allFinite())
    throw Error("softmax_cross_entropy: non-finite logits");
  Tape<S>& t = logits.tape();
  const auto& x = logits.value().array();
  const S m = x.maxCoeff();
  Vec<S> p = (x - m).exp();
  const S z = p.sum();
  p /= z;
  Mat<S> y(1, 1);
  y(0, 0) = std::log(z) - (x(target, 0) - m);
  return t.push(std::move(y),
                [il = logits.id(), target, p = std::move(p)](Tape<S>& tp, std::size_t self) {
                  const S g = tp.grad(self)(0, 0);
                  Mat<S>& gl = tp.grad(il);
                  gl += g * p;
                  gl(target, 0) -= g;
                });
}

// Binary cross entropy on a single logit against a 0/1 label, the stable
// softplus form: max(z,0) - z*y + log1p(exp(-|z|)).
template <typename S>
Var<S> binary_cross_entropy_logit(Var<S> logit, bool label) {
  if (logit.rows() != 1 || logit.cols() != 1)
    throw ShapeError("binary_cross_entropy_logit: logit must be 1x1");
  Tape<S>& t = logit.tape();
  const S z = logit.scalar();
  if (!std::isfinite(static_cast<double>(z)))
    throw Error("binary_cross_entropy_logit: non-finite logit");
  const S y = label ? S(1) : S(0);
  Mat<S> out(1, 1);
  out(0, 0) = std::max(z, S(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
  return t.push(std::move(out), [iz = logit.id(), y](Tape<S>& tp, std::size_t self) {
    const S z = tp.value(iz)(0, 0);
    const S s = z >= S(0) ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
    tp.grad(iz)(0, 0) += tp.grad(self)(0, 0) * (s - y);
  });
}

// Picks one row of an embedding table as a column vector.
template <typename S>
Var<S> embedding_lookup(Var<S> table, Index row) {
  if (row < 0 || row >= table.rows())
    throw ShapeError("embedding_lookup: row " + std::to_string(row) + " outside [0, " +
                     std::to_string(table.rows()) + ")");
  Tape<S>& t = table.tape();
  Mat<S> y = table.value().row(row).transpose();
  return t.push(std::move(y), [it = table.id(), row](Tape<S>& tp, std::size_t self) {
    tp.grad(it).row(row) += tp.grad(self).transpose();
  });
}

// Sum of a list of scalars, folded pairwise in order.
template <typename S>
Var<S> add_all(const std::vector<Var<S>>& terms) {
  if (terms.empty()) throw Error("add_all: empty term list");
  Var<S> acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

// Distance from each row's max to its runner-up; rows with a single column
// get an infinite margin. Used to spot inputs where max pooling is about to
// switch winners and a finite difference would straddle the kink.
template <typename S>
Vec<S> rowwise_top2_margin(const Mat<S>& x) {
  Vec<S> margin(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    if (x.cols() < 2) {
      margin(r) = std::numeric_limits<S>::infinity();
      continue;
    }
    S best = x(r, 0), second = -std::numeric_limits<S>::infinity();
    for (Index c = 1; c < x.cols(); ++c) {
      const S v = x(r, c);
      if (v > best) {
        second = best;
        best = v;
      } else if (v > second) {
        second = v;
      }
    }
    margin(r) = best - second;
  }
  return margin;
}

}  // namespace paragen
