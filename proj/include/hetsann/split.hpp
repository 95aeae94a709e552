// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "hetsann/error.hpp"
#include "hetsann/graph.hpp"

namespace hetsann {

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Local node indices of one labeled type.
struct TypeSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Stratified random split of the labeled nodes of one type.
///
/// Target sizes are floor(N * val) and floor(N * test); the rest is train.
/// Nodes are ordered by their fractional position inside a shuffled copy of
/// their class, so any prefix holds every class in proportion (within one
/// node). Test takes the first prefix, validation the next. Classes with
/// fewer than 3 members go to train entirely.
inline TypeSplit split_labeled(const std::vector<int>& labels, const SplitRatios& ratios, std::uint64_t seed,
                               const std::string& type_name = "") {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  std::mt19937_64 rng(seed);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) by_class[labels[i]].push_back(i);
  }

  TypeSplit out;
  struct Keyed {
    double key;
    double tie;
    std::size_t node;
  };
  std::vector<Keyed> pool;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& [cls, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    if (members.size() < 3) {
      std::cerr << "warning: class " << cls << (type_name.empty() ? "" : " of type '" + type_name + "'") << " has "
                << members.size() << " labeled node(s); all assigned to train\n";
      out.train.insert(out.train.end(), members.begin(), members.end());
      continue;
    }
    const double offset = unit(rng);
    for (std::size_t k = 0; k < members.size(); ++k) {
      pool.push_back({(static_cast<double>(k) + offset) / static_cast<double>(members.size()), unit(rng), members[k]});
    }
  }
  std::sort(pool.begin(), pool.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.tie < b.tie;
  });

  const std::size_t n = pool.size();
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.test + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.val + 1e-9));
  for (std::size_t k = 0; k < n; ++k) {
    if (k < n_test) {
      out.test.push_back(pool[k].node);
    } else if (k < n_test + n_val) {
      out.val.push_back(pool[k].node);
    } else {
      out.train.push_back(pool[k].node);
    }
  }
  for (auto* v : {&out.train, &out.val, &out.test}) std::sort(v->begin(), v->end());
  return out;
}

/// Splits for each requested type; seeds are derived per type.
inline std::vector<TypeSplit> split_dataset(const HetGraph& g, const std::vector<TypeId>& types,
                                            const SplitRatios& ratios, std::uint64_t seed) {
  std::vector<TypeSplit> out;
  for (TypeId t : types) {
    out.push_back(split_labeled(g.labels(t), ratios, seed * 1000003ULL + static_cast<std::uint64_t>(t) + 1,
                                g.node_type(t).name));
  }
  return out;
}

}  // namespace hetsann
