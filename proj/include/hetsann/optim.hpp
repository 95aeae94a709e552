// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hetsann/error.hpp"
#include "hetsann/params.hpp"
#include "hetsann/tensor.hpp"

namespace hetsann {

struct AdamOptions {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates, zero-initialized.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;

  AdamState() = default;
  explicit AdamState(const ParamStore& store) {
    for (const auto& p : store) {
      m.emplace_back(p.value.rows(), p.value.cols());
      v.emplace_back(p.value.rows(), p.value.cols());
    }
  }
};

/// Bias-corrected Adam update of every parameter in place.
inline void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& state,
                      const AdamOptions& opt) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& w = params[k].value;
    const Tensor& g = grads[k];
    if (!w.same_shape(g)) throw ShapeError("adam_step: gradient shape mismatch for " + params[k].name);
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
    }
  }
}

}  // namespace hetsann
