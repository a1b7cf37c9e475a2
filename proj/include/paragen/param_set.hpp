// Copyright (c) 2026 paragen contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "paragen/tape.hpp"

namespace paragen {

// Ordered, named collection of tensors. Order is part of the contract: it
// fixes serialization layout and gradient pairing, so iteration is always by
// insertion order, never by hash order.
template <typename S>
class ParamSet {
 public:
  Mat<S>& add(const std::string& name, Mat<S> value) {
    if (index_.count(name)) throw Error("ParamSet: duplicate name " + name);
    index_[name] = values_.size();
    names_.push_back(name);
    values_.push_back(std::move(value));
    return values_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("ParamSet: no tensor named " + name);
    return it->second;
  }

  Mat<S>& at(const std::string& name) { return values_[index_of(name)]; }
  const Mat<S>& at(const std::string& name) const { return values_[index_of(name)]; }

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Mat<S>& value(std::size_t i) { return values_[i]; }
  const Mat<S>& value(std::size_t i) const { return values_[i]; }

  ParamSet zeros_like() const {
    ParamSet out;
    for (std::size_t i = 0; i < size(); ++i)
      out.add(names_[i], Mat<S>::Zero(values_[i].rows(), values_[i].cols()));
    return out;
  }

  bool shapes_match(const ParamSet& o) const {
    if (size() != o.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (names_[i] != o.names_[i]) return false;
      if (values_[i].rows() != o.values_[i].rows() || values_[i].cols() != o.values_[i].cols())
        return false;
    }
    return true;
  }

  bool all_finite() const {
    for (const Mat<S>& v : values_)
      if (!v.allFinite()) return false;
    return true;
  }

  Index coeff_count() const {
    Index n = 0;
    for (const Mat<S>& v : values_) n += v.size();
    return n;
  }

  template <typename S2>
  ParamSet<S2> cast() const {
    ParamSet<S2> out;
    for (std::size_t i = 0; i < size(); ++i)
      out.add(names_[i], values_[i].template cast<S2>());
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Mat<S>> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Tape leaves mirroring a ParamSet, index-aligned. Build one per forward
// pass, then pull the accumulated gradients back out after backward().
template <typename S>
class ParamLeaves {
 public:
  ParamLeaves(Tape<S>& tape, const ParamSet<S>& params) : params_(&params) {
    vars_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) vars_.push_back(tape.leaf(params.value(i)));
  }

  Var<S> operator[](const std::string& name) const { return vars_[params_->index_of(name)]; }
  Var<S> at(std::size_t i) const { return vars_[i]; }

  // Adds each leaf's gradient into `out` (zero-initialized by the caller).
  // Leaves the entry untouched when backward never reached the leaf, so an
  // unused parameter keeps an exactly zero gradient.
  void accumulate_grads(ParamSet<S>& out) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      const Mat<S>& g = vars_[i].grad();
      if (g.size() != 0) out.value(i) += g;
    }
  }

 private:
  const ParamSet<S>* params_;
  std::vector<Var<S>> vars_;
};

}  // namespace paragen
