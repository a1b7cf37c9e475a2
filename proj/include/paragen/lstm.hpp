// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "paragen/tape.hpp"

namespace paragen {

// Fused LSTM weights: W is 4H x (input + H), b is 4H x 1, gate rows ordered
// input, forget, output, candidate.
template <typename S>
struct LstmVars {
  Var<S> W;
  Var<S> b;
};

template <typename S>
struct LstmState {
  Var<S> h;
  Var<S> c;
};

template <typename S>
LstmState<S> zero_state(Tape<S>& t, Index hidden) {
  return {t.leaf(Mat<S>::Zero(hidden, 1)), t.leaf(Mat<S>::Zero(hidden, 1))};
}

// One step. Gates are slices of a single fused affine transform so the whole
// cell costs one matmul.
template <typename S>
LstmState<S> lstm_cell(Var<S> x, const LstmState<S>& prev, const LstmVars<S>& p) {
  const Index hidden = prev.h.rows();
  if (p.W.rows() != 4 * hidden)
    throw ShapeError("lstm_cell: weight rows " + std::to_string(p.W.rows()) + " != 4*" +
                     std::to_string(hidden));
  if (p.W.cols() != x.rows() + hidden)
    throw ShapeError("lstm_cell: weight cols " + std::to_string(p.W.cols()) + " != input " +
                     std::to_string(x.rows()) + " + hidden " + std::to_string(hidden));
  if (p.b.rows() != 4 * hidden || p.b.cols() != 1)
    throw ShapeError("lstm_cell: bias must be 4Hx1");
  Var<S> z = add(matmul(p.W, concat_rows(x, prev.h)), p.b);
  Var<S> i = sigmoid(slice_rows(z, 0, hidden));
  Var<S> f = sigmoid(slice_rows(z, hidden, hidden));
  Var<S> o = sigmoid(slice_rows(z, 2 * hidden, hidden));
  Var<S> g = tanh(slice_rows(z, 3 * hidden, hidden));
  Var<S> c = add(mul(f, prev.c), mul(i, g));
  Var<S> h = mul(o, tanh(c));
  return {h, c};
}

}  // namespace paragen
