// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "paragen/grad_check.hpp"

using namespace paragen;

namespace {

// loss = 1/2 sum(theta^2), gradient = theta. Central differences are exact up
// to rounding for quadratics, so agreement must be near machine level.
double quad_loss(const ParamSet<double>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += 0.5 * p.value(i).array().square().sum();
  return s;
}

ParamSet<double> quad_grad(const ParamSet<double>& p) {
  ParamSet<double> g = p.zeros_like();
  for (std::size_t i = 0; i < g.size(); ++i) g.value(i) = p.value(i);
  return g;
}

ParamSet<double> small_params() {
  ParamSet<double> p;
  p.add("theta", Mat<double>::Constant(2, 3, 3.0));
  return p;
}

}  // namespace

TEST_CASE("quadratic gradient agrees to near machine precision") {
  ParamSet<double> p = small_params();
  const GradCheckReport r = grad_check(p, quad_loss, quad_grad);
  CHECK(r.checked == 6);
  CHECK(r.skipped == 0);
  CHECK(r.max_rel_err < 1e-9);
  // The probe must restore parameters bit-exactly.
  CHECK((p.at("theta").array() == 3.0).all());
}

TEST_CASE("a corrupted analytic gradient is caught") {
  ParamSet<double> p = small_params();
  const auto bad_grad = [](const ParamSet<double>& q) {
    ParamSet<double> g = quad_grad(q);
    g.at("theta")(0, 0) += 0.5;
    return g;
  };
  const GradCheckReport r = grad_check(p, quad_loss, bad_grad);
  CHECK(r.max_rel_err > 0.1);
  CHECK(r.worst_param == "theta");
  CHECK(r.worst_index == 0);
}

TEST_CASE("the skip predicate excludes coordinates") {
  ParamSet<double> p = small_params();
  const auto skip_all = [](std::size_t, Index) { return true; };
  const GradCheckReport r = grad_check(p, quad_loss, quad_grad, {}, skip_all);
  CHECK(r.checked == 0);
  CHECK(r.skipped == 6);
  CHECK(r.max_rel_err == 0.0);
}

TEST_CASE("large tensors are subsampled deterministically") {
  ParamSet<double> p;
  p.add("big", Mat<double>::Constant(40, 25, 1.0));  // 1000 > threshold 512
  GradCheckOptions opt;
  opt.seed = 123;
  const GradCheckReport r1 = grad_check(p, quad_loss, quad_grad, opt);
  CHECK(r1.checked == opt.subsample_count);
  const GradCheckReport r2 = grad_check(p, quad_loss, quad_grad, opt);
  CHECK(r1.per_param[0].worst_index == r2.per_param[0].worst_index);
  CHECK(r1.max_rel_err == r2.max_rel_err);
}

TEST_CASE("per-parameter stats cover every tensor") {
  ParamSet<double> p;
  p.add("a", Mat<double>::Constant(1, 2, 2.0));
  p.add("b", Mat<double>::Constant(2, 2, -1.0));
  const GradCheckReport r = grad_check(p, quad_loss, quad_grad);
  REQUIRE(r.per_param.size() == 2);
  CHECK(r.per_param[0].name == "a");
  CHECK(r.per_param[1].name == "b");
  CHECK(r.per_param[0].checked == 2);
  CHECK(r.per_param[1].checked == 4);
}

TEST_CASE("non-finite analytic gradients are an error") {
  ParamSet<double> p = small_params();
  const auto nan_grad = [](const ParamSet<double>& q) {
    ParamSet<double> g = quad_grad(q);
    g.at("theta")(0, 0) = std::numeric_limits<double>::quiet_NaN();
    return g;
  };
  CHECK_THROWS_AS(grad_check(p, quad_loss, nan_grad), Error);
}

TEST_CASE("analytic gradients with foreign shapes are an error") {
  ParamSet<double> p = small_params();
  const auto alien_grad = [](const ParamSet<double>&) {
    ParamSet<double> g;
    g.add("theta", Mat<double>::Zero(1, 1));
    return g;
  };
  CHECK_THROWS_AS(grad_check(p, quad_loss, alien_grad), ShapeError);
}
