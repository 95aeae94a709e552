// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "hetsann/autodiff.hpp"
#include "hetsann/error.hpp"
#include "hetsann/graph.hpp"
#include "hetsann/metrics.hpp"
#include "hetsann/model.hpp"
#include "hetsann/optim.hpp"
#include "hetsann/split.hpp"

namespace hetsann {

inline constexpr double kDefaultLr = 0.005;
inline constexpr double kSingleTaskLr = 0.001;  // learning rate used for single-labeled-type data

struct TrainConfig {
  double lr = kDefaultLr;
  std::size_t max_epochs = 1000;
  std::size_t patience = 100;  // epochs without validation improvement before stopping
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool verbose = false;

  void validate() const {
    if (lr < 0.0) throw ConfigError("lr must be >= 0");
    if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
    if (patience == 0 || patience > max_epochs) throw ConfigError("patience must be in [1, max_epochs]");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown loss;     // training objective of this epoch's step (dropout on)
  double train_micro_f1 = 0.0;
  double val_micro_f1 = 0.0;
  double test_micro_f1 = 0.0;
  double val_loss = 0.0;  // main-task cross-entropy on validation, dropout off
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 if no epoch ran

  const EpochRecord& best() const { return epochs.at(best_epoch - 1); }

  void write_csv(std::ostream& os) const {
    os << "epoch,loss_total,loss_class,loss_cycle,train_microf1,val_microf1,test_microf1\n";
    for (const auto& e : epochs) {
      os << e.epoch << ',' << e.loss.total << ',' << e.loss.class_total() << ',' << e.loss.cycle << ','
         << e.train_micro_f1 << ',' << e.val_micro_f1 << ',' << e.test_micro_f1 << '\n';
    }
  }
};

/// Micro/Macro F1 of one task on each split.
struct TaskEvaluation {
  TypeId type = 0;
  double train_micro = 0.0, train_macro = 0.0;
  double val_micro = 0.0, val_macro = 0.0;
  double test_micro = 0.0, test_macro = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

namespace trainer_detail {

inline double f1_or_nan(bool micro, const std::vector<int>& pred, const std::vector<int>& truth,
                        const std::vector<std::size_t>& subset, std::size_t classes) {
  if (subset.empty()) return std::numeric_limits<double>::quiet_NaN();
  return micro ? micro_f1(pred, truth, subset, classes) : macro_f1(pred, truth, subset, classes);
}

inline double loss_or_nan(const Tensor& logits, const std::vector<int>& labels, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  Tape tape;
  return softmax_cross_entropy(tape.constant(logits), labels, rows).value().item();
}

}  // namespace trainer_detail

/// Logits per task with dropout off.
inline std::vector<Tensor> infer_logits(const HetGraph& g, const HetSannModel& model) {
  Tape tape;
  BoundParams params(tape, model.params(), /*requires_grad=*/false);
  std::mt19937_64 unused(0);
  ForwardResult fwd = forward(tape, g, model, params, /*training=*/false, unused);
  std::vector<Tensor> out;
  for (const Var& z : fwd.logits) out.push_back(z.value());
  return out;
}

/// Scores every task of the model on its split; splits[k] belongs to task k.
inline std::vector<TaskEvaluation> evaluate(const HetGraph& g, const HetSannModel& model,
                                            const std::vector<TypeSplit>& splits) {
  using trainer_detail::f1_or_nan;
  using trainer_detail::loss_or_nan;
  const std::vector<Tensor> logits = infer_logits(g, model);
  std::vector<TaskEvaluation> out;
  for (std::size_t k = 0; k < model.classifiers().size(); ++k) {
    const Classifier& c = model.classifiers()[k];
    const std::vector<int> pred = predict(logits[k]);
    const std::vector<int>& truth = g.labels(c.type);
    const TypeSplit& s = splits.at(k);
    TaskEvaluation e;
    e.type = c.type;
    e.train_micro = f1_or_nan(true, pred, truth, s.train, c.num_classes);
    e.train_macro = f1_or_nan(false, pred, truth, s.train, c.num_classes);
    e.val_micro = f1_or_nan(true, pred, truth, s.val, c.num_classes);
    e.val_macro = f1_or_nan(false, pred, truth, s.val, c.num_classes);
    e.test_micro = f1_or_nan(true, pred, truth, s.test, c.num_classes);
    e.test_macro = f1_or_nan(false, pred, truth, s.test, c.num_classes);
    e.train_loss = loss_or_nan(logits[k], truth, s.train);
    e.val_loss = loss_or_nan(logits[k], truth, s.val);
    out.push_back(e);
  }
  return out;
}

/// Objective and gradients for one full-batch step.
struct StepResult {
  LossBreakdown loss;
  std::vector<Tensor> grads;  // aligned with model.params()
};

inline StepResult compute_gradients(const HetGraph& g, const HetSannModel& model, const TaskMasks& masks,
                                    bool training, std::mt19937_64& rng) {
  Tape tape;
  BoundParams params(tape, model.params());
  ForwardResult fwd = forward(tape, g, model, params, training, rng);
  LossGraph loss = total_loss(tape, g, model, params, fwd, masks);
  tape.backward(loss.total);
  StepResult out;
  out.loss = loss.breakdown;
  for (const Var& v : params.vars) out.grads.push_back(tape.grad(v));
  return out;
}

/// Full-batch Adam training with early stopping on the main task's
/// validation Micro F1 (ties broken by lower validation loss). On return the
/// model holds the parameters of the best epoch.
inline TrainHistory train(const HetGraph& g, HetSannModel& model, const std::vector<TypeSplit>& splits,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (splits.size() != model.classifiers().size()) throw std::invalid_argument("train: one split per task required");
  TaskMasks masks;
  for (const auto& s : splits) {
    if (s.train.empty()) throw ConfigError("train: a task has no training nodes");
    masks.per_task.push_back(s.train);
  }

  AdamOptions adam{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  AdamState state(model.params());
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainHistory history;
  std::vector<Parameter> best_params(model.params().begin(), model.params().end());
  double best_f1 = -1.0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    StepResult step;
    try {
      step = compute_gradients(g, model, masks, /*training=*/true, dropout_rng);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    adam_step(model.params(), step.grads, state, adam);

    const TaskEvaluation main = evaluate(g, model, splits).front();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = step.loss;
    rec.train_micro_f1 = main.train_micro;
    rec.val_micro_f1 = main.val_micro;
    rec.test_micro_f1 = main.test_micro;
    rec.val_loss = main.val_loss;
    history.epochs.push_back(rec);

    // Without a validation set, select on the training split.
    const double sel_f1 = std::isnan(main.val_micro) ? main.train_micro : main.val_micro;
    const double sel_loss = std::isnan(main.val_loss) ? main.train_loss : main.val_loss;
    if (sel_f1 > best_f1 || (sel_f1 == best_f1 && sel_loss < best_val_loss)) {
      best_f1 = sel_f1;
      best_val_loss = sel_loss;
      history.best_epoch = epoch;
      best_params.assign(model.params().begin(), model.params().end());
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
    if (cfg.verbose && (epoch % 50 == 0 || epoch == 1)) {
      std::clog << "epoch " << epoch << " loss " << rec.loss.total << " train " << rec.train_micro_f1 << " val "
                << rec.val_micro_f1 << '\n';
    }
  }
  for (std::size_t i = 0; i < best_params.size(); ++i) model.params()[i].value = best_params[i].value;
  return history;
}

}  // namespace hetsann
