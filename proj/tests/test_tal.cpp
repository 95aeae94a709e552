// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "hetsann/tal.hpp"
#include "oracles.hpp"

namespace {

using namespace hetsann;

std::vector<double> vec(std::initializer_list<double> v) { return v; }

TEST(Transform, IdentityZeroAndHandArithmetic) {
  const Tensor h = Tensor::column({1, 2, 3});
  EXPECT_EQ(transform(Tensor::identity(3), h), h);
  EXPECT_EQ(transform(Tensor(2, 3), h), Tensor(2, 1));
  EXPECT_EQ(transform(Tensor::from({{1, 0, 2}, {0, 1, -1}}), h), Tensor::column({7, -1}));
  EXPECT_THROW(transform(Tensor(2, 2), h), ShapeError);
}

TEST(ConcatScore, Examples) {
  EXPECT_EQ(attention_score_concat(vec({1, 2}), vec({3, 4}), vec({0, 0, 0, 0}), 0.2), 0.0);
  EXPECT_EQ(attention_score_concat(vec({1, 0}), vec({0, 1}), vec({1, 2, 3, 4}), 0.2), 5.0);
  EXPECT_DOUBLE_EQ(attention_score_concat(vec({1}), vec({0}), vec({-5, 0}), 0.2), -1.0);
  EXPECT_THROW(attention_score_concat(vec({1}), vec({0}), vec({1}), 0.2), ShapeError);
}

TEST(VoicesScore, Examples) {
  EXPECT_EQ(attention_score_voices(vec({0, 0}), vec({3, 4}), vec({5, 6}), 1.0, 0.2), 0.0);
  EXPECT_EQ(attention_score_voices(vec({1, 2}), vec({3, -1}), vec({0, 0}), 1.0, 0.2), 1.0);
  EXPECT_EQ(attention_score_voices(vec({1, 1}), vec({2, 0}), vec({0, 1}), 1.0, 0.2), 3.0);
  EXPECT_EQ(attention_score_voices(vec({1, 1}), vec({2, 0}), vec({0, 1}), -1.0, 0.2), 1.0);
  EXPECT_THROW(attention_score_voices(vec({1, 1}), vec({2}), vec({0, 1}), 1.0, 0.2), ShapeError);
}

TEST(NormalizeAttention, Examples) {
  EXPECT_EQ(normalize_attention({4.0}, {0}, 1), vec({1.0}));
  EXPECT_EQ(normalize_attention({0.3, 0.3}, {0, 0}, 1), vec({0.5, 0.5}));
}

TEST(Aggregate, Examples) {
  EXPECT_EQ(aggregate({1.0}, Tensor::from({{1, 0}}), {0}, 1), Tensor::from({{1, 0}}));
  EXPECT_EQ(aggregate({0.5, 0.5}, Tensor::from({{2, 0}, {0, 2}}), {0, 0}, 1), Tensor::from({{1, 1}}));
}

/// A graph plus one layer whose attention vectors are randomized so scores
/// are nontrivial.
struct LayerFixture {
  HetGraph g;
  ParamStore store;
  TalLayer layer;

  LayerFixture(HetGraph graph, ScoreMode mode, std::size_t heads, std::size_t head_dim, std::uint64_t seed)
      : g(add_self_loops(graph)) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> dims;
    for (const auto& t : g.node_types()) dims.push_back(t.feature_dim);
    TalLayerOptions opt;
    opt.num_heads = heads;
    opt.head_dim = head_dim;
    opt.score_mode = mode;
    layer = make_tal_layer(g, store, 1, dims, opt, rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < store.size(); ++i) {
      if (store[i].name.find(".a.") == std::string::npos) continue;
      for (auto& v : store[i].value.data()) v = u(rng);
    }
  }

  std::vector<Tensor> forward(const std::vector<Tensor>& states, AttentionTrace* trace = nullptr) const {
    Tape tape;
    BoundParams params(tape, store, false);
    std::vector<Var> in;
    for (const auto& s : states) in.push_back(tape.constant(s));
    std::mt19937_64 rng(0);
    std::vector<Tensor> out;
    for (const Var& v : tal_forward(g, in, layer, params, false, 0.6, rng, trace)) out.push_back(v.value());
    return out;
  }

  std::vector<Tensor> features() const {
    std::vector<Tensor> f;
    for (TypeId t = 0; t < static_cast<TypeId>(g.num_types()); ++t) f.push_back(g.features(t));
    return f;
  }
};

std::vector<oracle::Mat> as_mats(const std::vector<Tensor>& ts) {
  std::vector<oracle::Mat> out;
  for (const auto& t : ts) out.push_back(oracle::to_mat(t));
  return out;
}

struct OracleCase {
  ScoreMode mode;
  std::uint64_t seed;
};

class AgainstOracle : public ::testing::TestWithParam<OracleCase> {};

TEST_P(AgainstOracle, ForwardMatchesNaiveLayer) {
  std::mt19937_64 rng(GetParam().seed);
  LayerFixture fx(oracle::random_graph(rng, {2, 12, 3, 25, 2, true}), GetParam().mode, 2, 3, GetParam().seed);
  const auto states = fx.features();
  AttentionTrace trace;
  const auto got = fx.forward(states, &trace);
  std::vector<oracle::Vec> alpha;
  const auto want = oracle::tal_layer(fx.g, as_mats(states), fx.layer, fx.store, &alpha);
  for (std::size_t t = 0; t < got.size(); ++t) {
    ASSERT_EQ(got[t].rows(), fx.g.type_count(static_cast<TypeId>(t)));
    ASSERT_EQ(got[t].cols(), fx.layer.out_dim(static_cast<TypeId>(t)));
    for (std::size_t r = 0; r < got[t].rows(); ++r) {
      for (std::size_t c = 0; c < got[t].cols(); ++c) EXPECT_NEAR(got[t](r, c), want[t][r][c], 1e-12);
    }
  }
  for (std::size_t m = 0; m < trace.size(); ++m) {
    for (std::size_t e = 0; e < fx.g.num_edges(); ++e) EXPECT_NEAR(trace[m][e], alpha[m][e], 1e-12);
  }
}

TEST_P(AgainstOracle, AttentionSumsToOnePerNodeAndHead) {
  std::mt19937_64 rng(GetParam().seed);
  LayerFixture fx(oracle::random_graph(rng, {3, 20, 4, 50, 2, true}), GetParam().mode, 3, 2, GetParam().seed);
  AttentionTrace trace;
  fx.forward(fx.features(), &trace);
  for (const auto& head : trace) {
    std::vector<double> total(fx.g.num_nodes(), 0.0);
    for (std::size_t e = 0; e < fx.g.num_edges(); ++e) total[fx.g.edges()[e].dst] += head[e];
    for (double s : total) EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST_P(AgainstOracle, PermutationEquivariance) {
  std::mt19937_64 rng(GetParam().seed);
  LayerFixture fx(oracle::random_graph(rng, {2, 12, 3, 25, 2, true}), GetParam().mode, 2, 3, GetParam().seed);
  std::vector<std::vector<std::size_t>> perm(fx.g.num_types());
  for (std::size_t t = 0; t < perm.size(); ++t) {
    perm[t].resize(fx.g.type_count(static_cast<TypeId>(t)));
    std::iota(perm[t].begin(), perm[t].end(), 0);
    std::shuffle(perm[t].begin(), perm[t].end(), rng);
  }
  const HetGraph permuted = permute_within_types(fx.g, perm);
  std::vector<Tensor> states;
  for (TypeId t = 0; t < static_cast<TypeId>(permuted.num_types()); ++t) states.push_back(permuted.features(t));

  Tape tape;
  BoundParams params(tape, fx.store, false);
  std::vector<Var> in;
  for (const auto& s : states) in.push_back(tape.constant(s));
  std::mt19937_64 drng(0);
  const auto out_perm = tal_forward(permuted, in, fx.layer, params, false, 0.0, drng);
  const auto out = fx.forward(fx.features());
  for (std::size_t t = 0; t < out.size(); ++t) {
    for (std::size_t k = 0; k < perm[t].size(); ++k) {
      for (std::size_t c = 0; c < out[t].cols(); ++c) {
        EXPECT_NEAR(out_perm[t].value()(k, c), out[t](perm[t][k], c), 1e-12);
      }
    }
  }
}

TEST_P(AgainstOracle, NonNeighborPerturbationLeavesOutputBitwise) {
  std::mt19937_64 rng(GetParam().seed);
  LayerFixture fx(oracle::random_graph(rng, {2, 14, 2, 12, 2, true}), GetParam().mode, 2, 3, GetParam().seed);
  const auto base_states = fx.features();
  const auto base = fx.forward(base_states);
  for (NodeId j = 0; j < fx.g.num_nodes(); ++j) {
    std::set<NodeId> sources;
    for (const auto& e : fx.g.in_edges(j)) sources.insert(e.src);
    for (NodeId k = 0; k < fx.g.num_nodes(); ++k) {
      if (sources.count(k)) continue;
      auto states = base_states;
      const auto tk = static_cast<std::size_t>(fx.g.type_of(k));
      for (auto& v : states[tk].row(fx.g.local_index(k))) v += 3.0;
      const auto out = fx.forward(states);
      const auto tj = static_cast<std::size_t>(fx.g.type_of(j));
      for (std::size_t c = 0; c < out[tj].cols(); ++c) {
        ASSERT_EQ(out[tj](fx.g.local_index(j), c), base[tj](fx.g.local_index(j), c)) << "j=" << j << " k=" << k;
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Modes, AgainstOracle,
                         ::testing::Values(OracleCase{ScoreMode::kConcat, 1}, OracleCase{ScoreMode::kConcat, 2},
                                           OracleCase{ScoreMode::kConcat, 3}, OracleCase{ScoreMode::kVoices, 1},
                                           OracleCase{ScoreMode::kVoices, 2}, OracleCase{ScoreMode::kVoices, 3}));

HetGraph author_paper_graph(bool parallel) {
  std::vector<NodeSpec> nodes{{"u", "author", "x", {1.0, -0.5}},
                              {"v", "author", "y", {0.2, 0.7}},
                              {"p", "paper", "x", {0.3, 0.1, -0.4}},
                              {"q", "paper", "y", {-1.0, 0.5, 0.9}}};
  std::vector<EdgeSpec> edges{{"u", "p", "writes"}, {"v", "q", "writes"}, {"p", "q", "similar"}};
  if (parallel) edges.push_back({"u", "p", "reviews"});
  std::vector<RelationSpec> rels{{"writes", "author", "paper", "written_by"}, {"similar", "paper", "paper", "similar"}};
  if (parallel) rels.push_back({"reviews", "author", "paper", "reviewed_by"});
  return build_graph(nodes, edges, rels);
}

TEST(ParallelRelations, SecondRelationAddsOneSoftmaxTerm) {
  LayerFixture single(author_paper_graph(false), ScoreMode::kConcat, 1, 2, 5);
  LayerFixture both(author_paper_graph(true), ScoreMode::kConcat, 1, 2, 5);
  const NodeId p = *both.g.find_node("p");
  EXPECT_EQ(both.g.in_edges(p).size(), single.g.in_edges(*single.g.find_node("p")).size() + 1);

  AttentionTrace trace;
  const auto got = both.forward(both.features(), &trace);
  std::vector<oracle::Vec> alpha;
  const auto want = oracle::tal_layer(both.g, as_mats(both.features()), both.layer, both.store, &alpha);
  double total = 0.0;
  for (std::size_t e : both.g.in_edge_indices(p)) {
    EXPECT_NEAR(trace[0][e], alpha[0][e], 1e-12);
    total += trace[0][e];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  for (std::size_t t = 0; t < got.size(); ++t) {
    for (std::size_t r = 0; r < got[t].rows(); ++r) {
      for (std::size_t c = 0; c < got[t].cols(); ++c) EXPECT_NEAR(got[t](r, c), want[t][r][c], 1e-12);
    }
  }
}

TEST(Voices, ReverseVectorIsExactNegationByAliasing) {
  LayerFixture fx(author_paper_graph(true), ScoreMode::kVoices, 2, 3, 6);
  for (std::size_t m = 0; m < fx.layer.heads.size(); ++m) {
    for (const auto& r : fx.g.relations()) {
      const auto& ref = fx.layer.heads[m].attention[static_cast<std::size_t>(r.id)];
      const auto& rev = fx.layer.heads[m].attention[static_cast<std::size_t>(r.reverse_id)];
      if (r.is_paired()) {
        EXPECT_EQ(ref.param, rev.param);
        EXPECT_EQ(ref.sign, -rev.sign);
        Tensor neg = materialized_attention(fx.layer, fx.store, m, r.id);
        for (auto& v : neg.data()) v = -v;
        EXPECT_EQ(materialized_attention(fx.layer, fx.store, m, r.reverse_id), neg);
      } else {
        EXPECT_EQ(ref.sign, 1.0) << r.name;
      }
    }
  }
}

TEST(Voices, IndependentVectorCounts) {
  // Relations: writes/written_by, reviews/reviewed_by, similar (self-reverse),
  // and one self-loop per type: 7 relations.
  LayerFixture concat(author_paper_graph(true), ScoreMode::kConcat, 2, 3, 7);
  LayerFixture voices(author_paper_graph(true), ScoreMode::kVoices, 2, 3, 7);
  ASSERT_EQ(concat.g.num_relations(), 7u);
  EXPECT_EQ(concat.layer.independent_attention_vectors(), 7u);
  EXPECT_EQ(voices.layer.independent_attention_vectors(), 5u);
  const TypeId paper = *concat.g.find_type("paper");
  const RelationId writes = *concat.g.find_relation("writes");
  EXPECT_EQ(concat.store[concat.layer.heads[0].attention[static_cast<std::size_t>(writes)].param].value.rows(), 6u);
  EXPECT_EQ(voices.store[voices.layer.heads[0].attention[static_cast<std::size_t>(writes)].param].value.rows(), 3u);
  EXPECT_EQ(concat.layer.out_dim(paper), 6u);
}

TEST(ZeroAttention, ConcatModeIsUniformOverInEdges) {
  std::mt19937_64 rng(8);
  LayerFixture fx(oracle::random_graph(rng, {2, 12, 3, 25, 2, true}), ScoreMode::kConcat, 2, 3, 8);
  for (std::size_t i = 0; i < fx.store.size(); ++i) {
    if (fx.store[i].name.find(".a.") != std::string::npos) fx.store[i].value = Tensor(fx.store[i].value.rows(), 1);
  }
  AttentionTrace trace;
  fx.forward(fx.features(), &trace);
  for (const auto& head : trace) {
    for (std::size_t e = 0; e < fx.g.num_edges(); ++e) {
      EXPECT_NEAR(head[e], 1.0 / static_cast<double>(fx.g.in_edges(fx.g.edges()[e].dst).size()), 1e-15);
    }
  }
}

TEST(Residual, SingleNodeIdentityGivesHPlusEluH) {
  const HetGraph g = add_self_loops(build_graph({{"n", "a", std::nullopt, {1.0, -0.5}}}, {}, {}));
  ParamStore store;
  std::mt19937_64 rng(0);
  TalLayerOptions opt;
  opt.num_heads = 1;
  opt.head_dim = 2;
  opt.use_residual = true;
  const TalLayer layer = make_tal_layer(g, store, 2, {2}, opt, rng);
  store[layer.heads[0].W(0, 0)].value = Tensor::identity(2);
  Tape tape;
  BoundParams params(tape, store, false);
  const auto out = tal_forward(g, {tape.constant(g.features(0))}, layer, params, false, 0.0, rng);
  EXPECT_EQ(out[0].value(), Tensor::from({{1.0 + 1.0, -0.5 + std::expm1(-0.5)}}));
}

TEST(Residual, DimensionMismatchFailsAtConstruction) {
  const HetGraph g = add_self_loops(build_graph({{"n", "a", std::nullopt, {1.0, -0.5}}}, {}, {}));
  ParamStore store;
  std::mt19937_64 rng(0);
  TalLayerOptions opt;
  opt.num_heads = 2;
  opt.head_dim = 2;
  opt.use_residual = true;
  EXPECT_THROW(make_tal_layer(g, store, 2, {2}, opt, rng), ConfigError);
}

TEST(Construction, TransformsOnlyForRealizedTypePairs) {
  LayerFixture fx(author_paper_graph(false), ScoreMode::kConcat, 1, 2, 9);
  const TypeId author = *fx.g.find_type("author"), paper = *fx.g.find_type("paper");
  const auto& head = fx.layer.heads[0];
  EXPECT_TRUE(head.has_transform(paper, author));
  EXPECT_TRUE(head.has_transform(author, paper));
  EXPECT_TRUE(head.has_transform(author, author));
  EXPECT_TRUE(head.has_transform(paper, paper));
  EXPECT_EQ(head.transform.size(), 4u);
  EXPECT_EQ(fx.store[head.W(paper, author)].value.rows(), 2u);
  EXPECT_EQ(fx.store[head.W(paper, author)].value.cols(), 2u);
  EXPECT_EQ(fx.store[head.W(author, paper)].value.cols(), 3u);
}

TEST(Construction, RequiresSelfLoops) {
  ParamStore store;
  std::mt19937_64 rng(0);
  EXPECT_THROW(make_tal_layer(author_paper_graph(false), store, 1, {2, 3}, {}, rng), std::logic_error);
}

TEST(Forward, WrongStateShapeThrows) {
  LayerFixture fx(author_paper_graph(false), ScoreMode::kConcat, 1, 2, 10);
  auto states = fx.features();
  states[0] = Tensor(2, 5);
  EXPECT_THROW(fx.forward(states), ShapeError);
}

TEST(Forward, DropoutOnlyWhenTraining) {
  LayerFixture fx(author_paper_graph(false), ScoreMode::kConcat, 2, 2, 11);
  Tape tape;
  BoundParams params(tape, fx.store, false);
  std::vector<Var> in;
  for (const auto& s : fx.features()) in.push_back(tape.constant(s));
  std::mt19937_64 r1(1), r2(1);
  const auto a = tal_forward(fx.g, in, fx.layer, params, false, 0.6, r1);
  const auto b = fx.forward(fx.features());
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_EQ(a[t].value(), b[t]);
  const auto c = tal_forward(fx.g, in, fx.layer, params, true, 0.6, r2);
  bool differs = false;
  for (std::size_t t = 0; t < c.size(); ++t) differs |= !(c[t].value() == b[t]);
  EXPECT_TRUE(differs);
}

}  // namespace
