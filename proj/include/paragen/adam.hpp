// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "paragen/param_set.hpp"

namespace paragen {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. A parameter whose gradient stays exactly zero
// never moves and its moments stay zero, so freezing a tensor is just zeroing
// its gradient before the step.
template <typename S>
class Adam {
 public:
  Adam(AdamConfig cfg, const ParamSet<S>& params)
      : cfg_(cfg), m_(params.zeros_like()), v_(params.zeros_like()) {}

  void step(ParamSet<S>& params, const ParamSet<S>& grads) {
    if (!grads.shapes_match(params)) throw ShapeError("Adam::step: gradient shapes differ");
    if (!m_.shapes_match(params)) throw ShapeError("Adam::step: optimizer built for other shapes");
    if (!grads.all_finite()) throw Error("Adam::step: non-finite gradient");
    ++t_;
    const S b1 = static_cast<S>(cfg_.beta1);
    const S b2 = static_cast<S>(cfg_.beta2);
    const S bc1 = S(1) - static_cast<S>(std::pow(cfg_.beta1, static_cast<double>(t_)));
    const S bc2 = S(1) - static_cast<S>(std::pow(cfg_.beta2, static_cast<double>(t_)));
    const S lr = static_cast<S>(cfg_.lr);
    const S eps = static_cast<S>(cfg_.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto m = m_.value(i).array();
      auto v = v_.value(i).array();
      const auto g = grads.value(i).array();
      m = b1 * m + (S(1) - b1) * g;
      v = b2 * v + (S(1) - b2) * g.square();
      params.value(i).array() -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
    }
  }

  long step_count() const { return t_; }
  const ParamSet<S>& first_moment() const { return m_; }
  const ParamSet<S>& second_moment() const { return v_; }

 private:
  AdamConfig cfg_;
  ParamSet<S> m_;
  ParamSet<S> v_;
  long t_ = 0;
};

}  // namespace paragen
