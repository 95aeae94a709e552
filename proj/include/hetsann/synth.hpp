// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Planted-partition academic graph: authors (A) and papers (B), each with a
// class label. Edges are drawn independently with probability p_in between
// same-class endpoints and p_out otherwise, for three relation families:
//   writes   A -> B   (reverse: written)
//   cites    B -> B   (reverse: cited), ordered pairs
//   coauthor A -> A   (reverse: coauthor_rev), unordered pairs
// Features are class-mean Gaussians: mean mu * e_(class mod dim), unit noise.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hetsann/error.hpp"
#include "hetsann/graph.hpp"

namespace hetsann {

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t authors = 40;
  std::size_t papers = 60;
  std::size_t classes = 3;
  double p_in = 0.3;
  double p_out = 0.03;
  std::size_t feature_dim = 8;
  double mu = 1.0;
  double noise = 1.0;
  // Optional per-relation overrides of p_in; negative means "use p_in".
  double p_in_writes = -1.0;
  double p_in_cites = -1.0;
  double p_in_coauthor = -1.0;

  void validate() const {
    if (classes == 0 || feature_dim == 0) throw ConfigError("synth: classes and feature_dim must be positive");
    if (authors < classes || papers < classes) throw ConfigError("synth: node counts must be >= classes");
    if (p_in < 0.0 || p_in > 1.0 || p_out < 0.0 || p_out > 1.0) throw ConfigError("synth: probabilities in [0, 1]");
    if (noise < 0.0) throw ConfigError("synth: noise must be >= 0");
  }
};

/// Graph records for the spec; deterministic in spec.seed.
struct SynthRecords {
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  std::vector<RelationSpec> relations;
};

inline SynthRecords generate_records(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto balanced_labels = [&](std::size_t n) {
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % spec.classes;
    std::shuffle(labels.begin(), labels.end(), rng);
    return labels;
  };
  const auto author_class = balanced_labels(spec.authors);
  const auto paper_class = balanced_labels(spec.papers);

  SynthRecords out;
  out.relations = {{"writes", "author", "paper", "written"},
                   {"cites", "paper", "paper", "cited"},
                   {"coauthor", "author", "author", "coauthor_rev"}};

  auto add_nodes = [&](const std::string& prefix, const std::string& type, const std::vector<std::size_t>& cls) {
    for (std::size_t i = 0; i < cls.size(); ++i) {
      NodeSpec n;
      n.name = prefix + std::to_string(i);
      n.type = type;
      n.label = "c" + std::to_string(cls[i]);
      n.features.resize(spec.feature_dim);
      for (auto& f : n.features) f = spec.noise * gauss(rng);
      n.features[cls[i] % spec.feature_dim] += spec.mu;
      out.nodes.push_back(std::move(n));
    }
  };
  add_nodes("a", "author", author_class);
  add_nodes("p", "paper", paper_class);

  auto prob = [&](double override_in, bool same) {
    return same ? (override_in >= 0.0 ? override_in : spec.p_in) : spec.p_out;
  };
  for (std::size_t i = 0; i < spec.authors; ++i) {
    for (std::size_t j = 0; j < spec.papers; ++j) {
      if (unit(rng) < prob(spec.p_in_writes, author_class[i] == paper_class[j])) {
        out.edges.push_back({"a" + std::to_string(i), "p" + std::to_string(j), "writes"});
      }
    }
  }
  for (std::size_t i = 0; i < spec.papers; ++i) {
    for (std::size_t j = 0; j < spec.papers; ++j) {
      if (i == j) continue;
      if (unit(rng) < prob(spec.p_in_cites, paper_class[i] == paper_class[j])) {
        out.edges.push_back({"p" + std::to_string(i), "p" + std::to_string(j), "cites"});
      }
    }
  }
  for (std::size_t i = 0; i < spec.authors; ++i) {
    for (std::size_t j = i + 1; j < spec.authors; ++j) {
      if (unit(rng) < prob(spec.p_in_coauthor, author_class[i] == author_class[j])) {
        out.edges.push_back({"a" + std::to_string(i), "a" + std::to_string(j), "coauthor"});
      }
    }
  }
  return out;
}

/// Labeled two-type graph (without self-loops).
inline HetGraph generate(const SynthSpec& spec, ColdStart cold_start = ColdStart::kOneHot) {
  const SynthRecords r = generate_records(spec);
  BuildOptions opts;
  opts.cold_start = cold_start;
  return build_graph(r.nodes, r.edges, r.relations, opts);
}

}  // namespace hetsann
