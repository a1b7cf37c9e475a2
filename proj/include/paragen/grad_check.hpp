// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "paragen/param_set.hpp"
#include "paragen/rng.hpp"

namespace paragen {

struct GradCheckOptions {
  double eps = 1e-6;
  // Relative-error denominator floor. Below it a coordinate is effectively
  // held to absolute agreement of tol * denom_floor. Central differences of
  // a loss of magnitude L carry about L * 2^-52 / eps of absolute noise, so
  // raise the floor accordingly when L is far above 1.
  double denom_floor = 1e-8;
  // Tensors larger than this get a seeded random subsample of coordinates
  // instead of an exhaustive sweep.
  std::size_t subsample_threshold = 512;
  std::size_t subsample_count = 256;
  std::uint64_t seed = 17;
};

struct ParamCheckStat {
  std::string name;
  double worst_rel_err = 0.0;
  Index worst_index = -1;  // row-major flat index within the tensor
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::vector<ParamCheckStat> per_param;
};

// Central-difference check of analytic gradients, always in double.
//
//   loss(params)      re-evaluates the scalar loss at the given point
//   analytic(params)  returns d loss / d params at the given point
//   skip(p, k)        optional: true to exclude coordinate k (row-major flat
//                     index) of tensor p, e.g. where the loss has a kink
//
// Relative error is |a - n| / max(|a|, |n|, denom_floor). Params are
// restored bit-exactly after each probe.
inline GradCheckReport grad_check(
    ParamSet<double>& params,
    const std::function<double(const ParamSet<double>&)>& loss,
    const std::function<ParamSet<double>(const ParamSet<double>&)>& analytic,
    const GradCheckOptions& opt = {},
    const std::function<bool(std::size_t, Index)>& skip = nullptr) {
  ParamSet<double> grads = analytic(params);
  if (!grads.shapes_match(params)) throw ShapeError("grad_check: analytic shapes differ");
  if (!grads.all_finite()) throw Error("grad_check: non-finite analytic gradient");

  GradCheckReport report;
  Rng rng(opt.seed);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Mat<double>& tensor = params.value(p);
    const Index cols = tensor.cols();
    const auto total = static_cast<std::size_t>(tensor.size());

    std::vector<Index> coords;
    if (total > opt.subsample_threshold) {
      // Sample without replacement: shuffle a full index list, keep a prefix.
      std::vector<Index> all(total);
      for (std::size_t k = 0; k < total; ++k) all[k] = static_cast<Index>(k);
      rng.shuffle(all);
      coords.assign(all.begin(),
                    all.begin() + static_cast<std::ptrdiff_t>(
                                      std::min(opt.subsample_count, total)));
    } else {
      coords.resize(total);
      for (std::size_t k = 0; k < total; ++k) coords[k] = static_cast<Index>(k);
    }

    ParamCheckStat stat;
    stat.name = params.name(p);
    for (const Index k : coords) {
      if (skip && skip(p, k)) {
        ++stat.skipped;
        continue;
      }
      const Index r = k / cols;
      const Index c = k % cols;
      const double saved = tensor(r, c);
      tensor(r, c) = saved + opt.eps;
      const double up = loss(params);
      tensor(r, c) = saved - opt.eps;
      const double down = loss(params);
      tensor(r, c) = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw Error("grad_check: non-finite loss at " + stat.name);
      const double numeric = (up - down) / (2.0 * opt.eps);
      const double a = grads.value(p)(r, c);
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opt.denom_floor});
      ++stat.checked;
      if (rel > stat.worst_rel_err) {
        stat.worst_rel_err = rel;
        stat.worst_index = k;
        stat.analytic = a;
        stat.numeric = numeric;
      }
    }
    report.checked += stat.checked;
    report.skipped += stat.skipped;
    if (stat.worst_rel_err > report.max_rel_err) {
      report.max_rel_err = stat.worst_rel_err;
      report.worst_param = stat.name;
      report.worst_index = stat.worst_index;
      report.worst_analytic = stat.analytic;
      report.worst_numeric = stat.numeric;
    }
    report.per_param.push_back(std::move(stat));
  }
  return report;
}

}  // namespace paragen
