// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Analytic vs central-difference gradients of the full training objective
// on a small two-type fixture.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hetsann/graph.hpp"
#include "hetsann/model.hpp"
#include "hetsann/trainer.hpp"

namespace hetsann {

/// 12 nodes: 5 "author" (3 features, 2 classes) and 7 "paper" (4 features,
/// 2 classes); relations writes/written and the self-reverse paper relation
/// "similar". Self-loops included.
inline HetGraph gradcheck_fixture(std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<NodeSpec> nodes;
  for (int i = 0; i < 5; ++i) {
    NodeSpec n{"a" + std::to_string(i), "author", "c" + std::to_string(i % 2), {}};
    for (int k = 0; k < 3; ++k) n.features.push_back(gauss(rng));
    nodes.push_back(std::move(n));
  }
  for (int i = 0; i < 7; ++i) {
    NodeSpec n{"p" + std::to_string(i), "paper", "c" + std::to_string(i % 2), {}};
    for (int k = 0; k < 4; ++k) n.features.push_back(gauss(rng));
    nodes.push_back(std::move(n));
  }
  std::vector<RelationSpec> relations{{"writes", "author", "paper", "written"},
                                      {"similar", "paper", "paper", "similar"}};
  std::set<std::pair<int, int>> writes, similar;
  std::uniform_int_distribution<int> pick_paper(0, 6);
  for (int a = 0; a < 5; ++a) {
    while (writes.size() < static_cast<std::size_t>(2 * (a + 1))) writes.insert({a, pick_paper(rng)});
  }
  while (similar.size() < 6) {
    const int u = pick_paper(rng), v = pick_paper(rng);
    if (u != v && !similar.count({v, u})) similar.insert({u, v});
  }
  std::vector<EdgeSpec> edges;
  for (auto [a, p] : writes) edges.push_back({"a" + std::to_string(a), "p" + std::to_string(p), "writes"});
  for (auto [u, v] : similar) edges.push_back({"p" + std::to_string(u), "p" + std::to_string(v), "similar"});
  BuildOptions opts;
  opts.warn_duplicates = false;
  return add_self_loops(build_graph(nodes, edges, relations, opts));
}

struct GradcheckOptions {
  std::string variant = "mrv";
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t head_dim = 3;  // 2 x 3 == 6 keeps a residual on layer 2
  double beta1 = 1.0;        // large enough that the cycle terms dominate their parameters' gradients
  double beta2 = 1.0;
  double reg_weight = 5e-4;
  double eps = 1e-5;
  double tolerance = 1e-4;
  double denominator_floor = 1e-6;
  std::uint64_t seed = 0;
  bool inject_error = false;  // negative control: corrupt one analytic entry
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_param;
  std::size_t scalars = 0;
  double seconds = 0.0;
  bool passed = false;
};

/// Builds the model with nonzero attention vectors and perturbed
/// pseudo-inverses so no score sits on the LeakyReLU kink.
inline HetSannModel gradcheck_model(const HetGraph& g, const GradcheckOptions& opt) {
  ModelConfig cfg;
  cfg.layers = opt.layers;
  cfg.heads = opt.heads;
  cfg.head_dim = opt.head_dim;
  cfg.beta1 = opt.beta1;
  cfg.beta2 = opt.beta2;
  cfg.reg_weight = opt.reg_weight;
  cfg.dropout = 0.0;
  Variant::parse(opt.variant).apply(cfg);
  std::vector<TypeId> tasks{*g.find_type("author")};
  if (cfg.multi_task) tasks.push_back(*g.find_type("paper"));
  HetSannModel model(g, cfg, tasks, opt.seed);
  std::mt19937_64 rng(opt.seed + 17);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    Parameter& p = model.params()[i];
    if (p.name.find(".a.") != std::string::npos || p.name.ends_with(".b")) {
      for (auto& v : p.value.data()) v = u(rng);
    } else if (p.name.find(".Winv.") != std::string::npos) {
      for (auto& v : p.value.data()) v += 0.2 * u(rng);
    }
  }
  return model;
}

inline GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const HetGraph g = gradcheck_fixture(opt.seed);
  HetSannModel model = gradcheck_model(g, opt);
  TaskMasks masks;
  for (const Classifier& c : model.classifiers()) {
    std::vector<std::size_t> all;
    const auto& labels = g.labels(c.type);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= 0) all.push_back(i);
    }
    masks.per_task.push_back(std::move(all));
  }

  std::mt19937_64 unused(0);
  StepResult analytic = compute_gradients(g, model, masks, /*training=*/false, unused);
  if (opt.inject_error && !analytic.grads.empty()) analytic.grads.front()[0] += 1e-2 + 0.5 * std::abs(analytic.grads.front()[0]);

  auto objective = [&]() {
    Tape tape;
    BoundParams params(tape, model.params(), /*requires_grad=*/false);
    ForwardResult fwd = forward(tape, g, model, params, /*training=*/false, unused);
    return total_loss(tape, g, model, params, fwd, masks).total.value().item();
  };

  GradcheckReport report;
  for (std::size_t k = 0; k < model.params().size(); ++k) {
    Tensor& w = model.params()[k].value;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double orig = w[i];
      w[i] = orig + opt.eps;
      const double up = objective();
      w[i] = orig - opt.eps;
      const double down = objective();
      w[i] = orig;
      const double numeric = (up - down) / (2.0 * opt.eps);
      const double a = analytic.grads[k][i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opt.denominator_floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = model.params()[k].name + "[" + std::to_string(i) + "]";
      }
      ++report.scalars;
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.passed = report.max_rel_error < opt.tolerance;
  return report;
}

}  // namespace hetsann
