// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <vector>

#include "hetsann/synth.hpp"

namespace {

using namespace hetsann;

/// Fraction of non-self-loop edges joining two nodes of the same class.
double same_class_fraction(const HetGraph& g) {
  double same = 0.0, total = 0.0;
  for (const auto& e : g.edges()) {
    const TypeId ts = g.type_of(e.src), td = g.type_of(e.dst);
    const std::string& cs = g.class_names(ts)[static_cast<std::size_t>(g.labels(ts)[g.local_index(e.src)])];
    const std::string& cd = g.class_names(td)[static_cast<std::size_t>(g.labels(td)[g.local_index(e.dst)])];
    same += cs == cd ? 1.0 : 0.0;
    total += 1.0;
  }
  return same / total;
}

TEST(Synth, SameSeedGivesIdenticalRecords) {
  SynthSpec spec;
  const SynthRecords a = generate_records(spec), b = generate_records(spec);
  ASSERT_EQ(a.edges.size(), b.edges.size());
  for (std::size_t k = 0; k < a.edges.size(); ++k) {
    EXPECT_EQ(a.edges[k].src, b.edges[k].src);
    EXPECT_EQ(a.edges[k].dst, b.edges[k].dst);
    EXPECT_EQ(a.edges[k].relation, b.edges[k].relation);
  }
  for (std::size_t k = 0; k < a.nodes.size(); ++k) EXPECT_EQ(a.nodes[k].features, b.nodes[k].features);
  spec.seed = 1;
  const SynthRecords c = generate_records(spec);
  EXPECT_TRUE(c.edges.size() != a.edges.size() || c.nodes[0].features != a.nodes[0].features);
}

TEST(Synth, DefaultSpecShape) {
  const SynthSpec spec;
  const HetGraph g = generate(spec);
  EXPECT_EQ(g.num_types(), 2u);
  EXPECT_EQ(g.type_count(*g.find_type("author")), spec.authors);
  EXPECT_EQ(g.type_count(*g.find_type("paper")), spec.papers);
  for (TypeId t = 0; t < 2; ++t) {
    EXPECT_EQ(g.num_classes(t), spec.classes);
    EXPECT_TRUE(g.has_attributes(t));
    EXPECT_EQ(g.features(t).cols(), spec.feature_dim);
    for (int l : g.labels(t)) EXPECT_GE(l, 0);
  }
  EXPECT_EQ(g.num_relations(), 6u);
}

TEST(Synth, EveryNodeHasAnInEdgeAfterSelfLoops) {
  const HetGraph g = add_self_loops(generate(SynthSpec{}));
  for (NodeId v = 0; v < g.num_nodes(); ++v) EXPECT_GE(g.in_edges(v).size(), 1u);
}

TEST(Synth, PlantedStructureIsAssortative) {
  const double frac = same_class_fraction(generate(SynthSpec{}));
  // Expected about 0.3 / (0.3 + 2 * 0.03) = 0.83 with three balanced classes.
  EXPECT_GT(frac, 0.7);
}

TEST(Synth, EqualProbabilitiesCarryNoStructuralSignal) {
  SynthSpec spec;
  spec.authors = 90;
  spec.papers = 90;
  spec.p_in = 0.1;
  spec.p_out = 0.1;
  const double frac = same_class_fraction(generate(spec));
  // Class base rate is 1/3 for three balanced classes.
  EXPECT_NEAR(frac, 1.0 / 3.0, 0.04);
}

TEST(Synth, InvalidSpecRejected) {
  SynthSpec spec;
  spec.classes = 0;
  EXPECT_THROW(generate(spec), ConfigError);
  spec = {};
  spec.authors = 2;
  EXPECT_THROW(generate(spec), ConfigError);
  spec = {};
  spec.p_in = 1.5;
  EXPECT_THROW(generate(spec), ConfigError);
}

}  // namespace
