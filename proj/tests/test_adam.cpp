// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "paragen/adam.hpp"
#include "paragen/rng.hpp"

using namespace paragen;

namespace {

ParamSet<double> two_tensors() {
  ParamSet<double> p;
  p.add("a", Mat<double>::Constant(2, 2, 1.5));
  p.add("b", Mat<double>::Constant(3, 1, -0.5));
  return p;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters and moments untouched") {
  ParamSet<double> p = two_tensors();
  const ParamSet<double> before = p;
  Adam<double> opt({}, p);
  for (int i = 0; i < 5; ++i) opt.step(p, p.zeros_like());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK((p.value(i).array() == before.value(i).array()).all());
    CHECK((opt.first_moment().value(i).array() == 0.0).all());
    CHECK((opt.second_moment().value(i).array() == 0.0).all());
  }
  CHECK(opt.step_count() == 5);
}

TEST_CASE("first step moves by about the learning rate against the gradient") {
  ParamSet<double> p;
  p.add("w", Mat<double>::Zero(2, 1));
  AdamConfig cfg;
  cfg.lr = 0.1;
  Adam<double> opt(cfg, p);
  ParamSet<double> g = p.zeros_like();
  g.at("w")(0, 0) = 1.0;   // positive gradient: parameter must drop
  g.at("w")(1, 0) = -3.0;  // negative: must rise
  opt.step(p, g);
  // Bias correction makes the first update lr * g/(|g| + eps).
  CHECK(p.at("w")(0, 0) == doctest::Approx(-0.1).epsilon(1e-8));
  CHECK(p.at("w")(1, 0) == doctest::Approx(0.1).epsilon(1e-8));
}

TEST_CASE("identical runs are bitwise identical") {
  Rng rng(5);
  ParamSet<double> p1 = two_tensors();
  ParamSet<double> p2 = two_tensors();
  Adam<double> o1({}, p1);
  Adam<double> o2({}, p2);
  for (int s = 0; s < 10; ++s) {
    ParamSet<double> g = p1.zeros_like();
    for (std::size_t i = 0; i < g.size(); ++i)
      for (Index k = 0; k < g.value(i).size(); ++k)
        g.value(i)(k / g.value(i).cols(), k % g.value(i).cols()) = rng.normal();
    o1.step(p1, g);
    o2.step(p2, g);
  }
  for (std::size_t i = 0; i < p1.size(); ++i)
    CHECK((p1.value(i).array() == p2.value(i).array()).all());
}

TEST_CASE("frozen tensors keep zero moments while others train") {
  ParamSet<double> p = two_tensors();
  Adam<double> opt({}, p);
  const Mat<double> b_before = p.at("b");
  for (int s = 0; s < 3; ++s) {
    ParamSet<double> g = p.zeros_like();
    g.at("a").array() = 0.3;  // only "a" gets gradient; "b" is frozen
    opt.step(p, g);
  }
  CHECK((p.at("b").array() == b_before.array()).all());
  CHECK((opt.first_moment().at("b").array() == 0.0).all());
  CHECK((opt.second_moment().at("b").array() == 0.0).all());
  CHECK((p.at("a").array() != 1.5).all());
}

TEST_CASE("shape and finiteness violations are rejected") {
  ParamSet<double> p = two_tensors();
  Adam<double> opt({}, p);

  ParamSet<double> wrong;
  wrong.add("a", Mat<double>::Zero(2, 2));
  wrong.add("b", Mat<double>::Zero(1, 1));  // wrong shape
  CHECK_THROWS_AS(opt.step(p, wrong), ShapeError);

  ParamSet<double> nan_grad = p.zeros_like();
  nan_grad.at("a")(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(opt.step(p, nan_grad), Error);

  ParamSet<double> other;
  other.add("a", Mat<double>::Zero(4, 4));
  other.add("b", Mat<double>::Zero(4, 4));
  Adam<double> opt_other({}, other);
  ParamSet<double> g = p.zeros_like();
  CHECK_THROWS_AS(opt_other.step(p, g), ShapeError);
}
