// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hetsann/autodiff.hpp"
#include "hetsann/tensor.hpp"

namespace hetsann {

struct Parameter {
  std::string name;
  Tensor value;
  bool regularized = true;  // included in the L2 penalty
};

/// Ordered collection of named trainable tensors. Indices are stable.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor value, bool regularized = true) {
    params_.push_back({std::move(name), std::move(value), regularized});
    return params_.size() - 1;
  }

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_.at(i); }
  const Parameter& operator[](std::size_t i) const { return params_.at(i); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

 private:
  std::vector<Parameter> params_;
};

/// Every parameter as a gradient-tracked leaf on one tape.
struct BoundParams {
  std::vector<Var> vars;

  BoundParams(Tape& tape, const ParamStore& store, bool requires_grad = true) {
    vars.reserve(store.size());
    for (const auto& p : store) vars.push_back(tape.leaf(p.value, requires_grad, p.name));
  }
  Var operator[](std::size_t i) const { return vars.at(i); }
};

/// Glorot/Xavier uniform: U(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-s, s);
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

}  // namespace hetsann
