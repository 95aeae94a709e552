// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "hetsann/optim.hpp"
#include "hetsann/split.hpp"
#include "hetsann/synth.hpp"
#include "hetsann/trainer.hpp"

namespace {

using namespace hetsann;

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParamStore store;
  store.add("w", Tensor::from({{1.5, -2.0}}));
  AdamState state(store);
  for (int k = 0; k < 5; ++k) adam_step(store, {Tensor(1, 2)}, state, {});
  EXPECT_EQ(store[0].value, Tensor::from({{1.5, -2.0}}));
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  ParamStore store;
  store.add("w", Tensor::from({{1.0, 1.0, 1.0}}));
  AdamState state(store);
  AdamOptions opt;
  opt.lr = 0.01;
  adam_step(store, {Tensor::from({{0.3, -4.0, 1e-3}})}, state, opt);
  EXPECT_NEAR(store[0].value[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(store[0].value[1], 1.0 + 0.01, 1e-9);
  EXPECT_NEAR(store[0].value[2], 1.0 - 0.01, 1e-7);
}

TEST(Adam, MatchesScalarRecurrence) {
  ParamStore store;
  store.add("w", Tensor::scalar(0.7));
  AdamState state(store);
  AdamOptions opt;
  opt.lr = 0.05;
  double w = 0.7, m = 0.0, v = 0.0;
  const std::vector<double> grads{0.4, -0.1, 2.0, 0.0, -3.0};
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    w -= 0.05 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    adam_step(store, {Tensor::scalar(g)}, state, opt);
    EXPECT_NEAR(store[0].value.item(), w, 1e-14);
  }
}

TEST(Adam, DescendsOnQuadratic) {
  ParamStore store;
  store.add("x", Tensor::scalar(1.0));
  AdamState state(store);
  AdamOptions opt;
  opt.lr = 0.1;
  double prev = 1.0;
  for (int k = 0; k < 10; ++k) {
    adam_step(store, {Tensor::scalar(2.0 * store[0].value.item())}, state, opt);
    const double x = store[0].value.item();
    EXPECT_LT(x * x, prev);
    prev = x * x;
  }
}

TEST(Adam, ShapeMismatchThrows) {
  ParamStore store;
  store.add("w", Tensor(2, 2));
  AdamState state(store);
  EXPECT_THROW(adam_step(store, {Tensor(2, 1)}, state, {}), ShapeError);
}

TEST(Split, TenNodesGiveEightOneOne) {
  const std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const TypeSplit s = split_labeled(labels, {}, 3);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.val.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
}

TEST(Split, PartitionsLabeledNodesAndSkipsUnlabeled) {
  std::vector<int> labels(57);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 7 == 0 ? -1 : static_cast<int>(i % 3);
  const TypeSplit s = split_labeled(labels, {}, 11);
  std::multiset<std::size_t> all;
  for (const auto* v : {&s.train, &s.val, &s.test}) all.insert(v->begin(), v->end());
  std::multiset<std::size_t> want;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) want.insert(i);
  }
  EXPECT_EQ(all, want);
}

TEST(Split, StratifiedWithinOneNodePerClass) {
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c) labels.insert(labels.end(), c == 0 ? 40 : 30, c);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TypeSplit s = split_labeled(labels, {}, seed);
    ASSERT_EQ(s.test.size(), 10u);
    ASSERT_EQ(s.val.size(), 10u);
    for (const auto* part : {&s.val, &s.test}) {
      std::map<int, double> count;
      for (std::size_t i : *part) count[labels[i]] += 1.0;
      EXPECT_NEAR(count[0], 10.0 * 40 / 100, 1.0 + 1e-9);
      EXPECT_NEAR(count[1], 10.0 * 30 / 100, 1.0 + 1e-9);
      EXPECT_NEAR(count[2], 10.0 * 30 / 100, 1.0 + 1e-9);
    }
  }
}

TEST(Split, DeterministicPerSeedAndVariesAcrossSeeds) {
  std::vector<int> labels(40);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  const TypeSplit a = split_labeled(labels, {}, 5), b = split_labeled(labels, {}, 5), c = split_labeled(labels, {}, 6);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.val, b.val);
  EXPECT_TRUE(a.test != c.test || a.val != c.val);
}

TEST(Split, RatiosMustSumToOne) {
  EXPECT_THROW(split_labeled({0, 1}, {0.5, 0.3, 0.1}, 0), ConfigError);
}

/// Small synthetic graph and model used by the training-loop tests.
struct TrainFixture {
  HetGraph g;
  ModelConfig cfg;
  std::vector<TypeId> tasks;
  std::vector<TypeSplit> splits;

  explicit TrainFixture(double dropout = 0.6) {
    SynthSpec spec;
    spec.authors = 20;
    spec.papers = 30;
    spec.classes = 2;
    g = add_self_loops(generate(spec));
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.head_dim = 4;
    cfg.dropout = dropout;
    tasks = {*g.find_type("author")};
    splits = split_dataset(g, tasks, {}, 0);
  }
  HetSannModel model(std::uint64_t seed = 0) const { return HetSannModel(g, cfg, tasks, seed); }
};

TEST(Train, ZeroLearningRateKeepsParametersAndHistoryFlat) {
  TrainFixture fx;
  HetSannModel m = fx.model();
  const std::vector<Parameter> before(m.params().begin(), m.params().end());
  TrainConfig tc;
  tc.lr = 0.0;
  tc.max_epochs = 8;
  tc.patience = 8;
  const TrainHistory h = train(fx.g, m, fx.splits, tc);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(m.params()[i].value, before[i].value);
  for (const auto& e : h.epochs) {
    EXPECT_EQ(e.val_micro_f1, h.epochs.front().val_micro_f1);
    EXPECT_EQ(e.train_micro_f1, h.epochs.front().train_micro_f1);
  }
}

TEST(Train, SameSeedGivesIdenticalHistory) {
  TrainFixture fx;
  TrainConfig tc;
  tc.max_epochs = 15;
  tc.patience = 15;
  tc.seed = 3;
  HetSannModel a = fx.model(3), b = fx.model(3);
  const TrainHistory ha = train(fx.g, a, fx.splits, tc), hb = train(fx.g, b, fx.splits, tc);
  ASSERT_EQ(ha.epochs.size(), hb.epochs.size());
  for (std::size_t k = 0; k < ha.epochs.size(); ++k) {
    EXPECT_EQ(ha.epochs[k].loss.total, hb.epochs[k].loss.total);
    EXPECT_EQ(ha.epochs[k].val_micro_f1, hb.epochs[k].val_micro_f1);
  }
  EXPECT_EQ(ha.best_epoch, hb.best_epoch);
  for (std::size_t i = 0; i < a.params().size(); ++i) EXPECT_EQ(a.params()[i].value, b.params()[i].value);
}

TEST(Train, LossDecreasesWithoutDropout) {
  TrainFixture fx(0.0);
  HetSannModel m = fx.model(1);
  TrainConfig tc;
  tc.max_epochs = 30;
  tc.patience = 30;
  const TrainHistory h = train(fx.g, m, fx.splits, tc);
  ASSERT_EQ(h.epochs.size(), 30u);
  EXPECT_LT(h.epochs.back().loss.class_total(), h.epochs.front().loss.class_total());
}

TEST(Train, RestoresBestEpochParameters) {
  TrainFixture fx;
  HetSannModel m = fx.model(2);
  TrainConfig tc;
  tc.max_epochs = 40;
  tc.patience = 10;
  const TrainHistory h = train(fx.g, m, fx.splits, tc);
  ASSERT_GE(h.best_epoch, 1u);
  const TaskEvaluation now = evaluate(fx.g, m, fx.splits).front();
  EXPECT_EQ(now.val_micro, h.best().val_micro_f1);
  EXPECT_EQ(now.test_micro, h.best().test_micro_f1);
  for (const auto& e : h.epochs) EXPECT_LE(e.val_micro_f1, h.best().val_micro_f1);
}

TEST(Train, StopsAfterPatienceWithoutImprovement) {
  TrainFixture fx;
  HetSannModel m = fx.model(4);
  TrainConfig tc;
  tc.max_epochs = 200;
  tc.patience = 5;
  const TrainHistory h = train(fx.g, m, fx.splits, tc);
  if (h.epochs.size() < tc.max_epochs) {
    EXPECT_EQ(h.epochs.size(), h.best_epoch + tc.patience);
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig tc;
  tc.patience = tc.max_epochs + 1;
  EXPECT_THROW(tc.validate(), ConfigError);
  tc = {};
  tc.lr = -1.0;
  EXPECT_THROW(tc.validate(), ConfigError);
}

TEST(Train, HistoryCsvHasOneRowPerEpoch) {
  TrainFixture fx;
  HetSannModel m = fx.model();
  TrainConfig tc;
  tc.max_epochs = 4;
  tc.patience = 4;
  const TrainHistory h = train(fx.g, m, fx.splits, tc);
  std::ostringstream os;
  h.write_csv(os);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "epoch,loss_total,loss_class,loss_cycle,train_microf1,val_microf1,test_microf1");
}

}  // namespace
