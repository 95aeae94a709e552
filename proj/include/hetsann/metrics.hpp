// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetsann {

/// Per-class counts over a node subset for single-label classification.
struct ConfusionCounts {
  std::vector<std::size_t> tp, fp, fn;

  explicit ConfusionCounts(std::size_t num_classes) : tp(num_classes), fp(num_classes), fn(num_classes) {}

  std::size_t num_classes() const noexcept { return tp.size(); }
};

inline ConfusionCounts confusion_counts(const std::vector<int>& pred, const std::vector<int>& truth,
                                        const std::vector<std::size_t>& subset, std::size_t num_classes) {
  if (subset.empty()) throw std::invalid_argument("metrics: empty subset");
  ConfusionCounts c(num_classes);
  for (std::size_t i : subset) {
    const int p = pred.at(i);
    const int t = truth.at(i);
    if (t < 0 || static_cast<std::size_t>(t) >= num_classes || p < 0 || static_cast<std::size_t>(p) >= num_classes) {
      throw std::invalid_argument("metrics: class index out of range at node " + std::to_string(i));
    }
    if (p == t) {
      ++c.tp[static_cast<std::size_t>(t)];
    } else {
      ++c.fp[static_cast<std::size_t>(p)];
      ++c.fn[static_cast<std::size_t>(t)];
    }
  }
  return c;
}

/// Global-count F1. With one label per node this equals accuracy.
inline double micro_f1(const ConfusionCounts& c) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t k = 0; k < c.num_classes(); ++k) {
    tp += c.tp[k];
    fp += c.fp[k];
    fn += c.fn[k];
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

/// Unweighted mean of per-class 2tp / (2tp + fp + fn). A class that is
/// neither predicted nor present scores 0.
inline double macro_f1(const ConfusionCounts& c) {
  if (c.num_classes() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < c.num_classes(); ++k) {
    const std::size_t denom = 2 * c.tp[k] + c.fp[k] + c.fn[k];
    if (denom > 0) s += 2.0 * static_cast<double>(c.tp[k]) / static_cast<double>(denom);
  }
  return s / static_cast<double>(c.num_classes());
}

inline double micro_f1(const std::vector<int>& pred, const std::vector<int>& truth,
                       const std::vector<std::size_t>& subset, std::size_t num_classes) {
  return micro_f1(confusion_counts(pred, truth, subset, num_classes));
}

inline double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth,
                       const std::vector<std::size_t>& subset, std::size_t num_classes) {
  return macro_f1(confusion_counts(pred, truth, subset, num_classes));
}

/// One row of the evaluation CSV.
struct EvalReport {
  std::string task;
  std::string split;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::uint64_t seed = 0;
};

inline void write_eval_header(std::ostream& os) { os << "task,split,micro_f1,macro_f1,seed\n"; }

inline void write_eval_row(std::ostream& os, const EvalReport& r) {
  os << r.task << ',' << r.split << ',' << r.micro_f1 << ',' << r.macro_f1 << ',' << r.seed << '\n';
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for one run
  std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_std: no values");
  MeanStd m;
  m.n = xs.size();
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(m.n);
  if (m.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(m.n - 1));
  }
  return m;
}

struct AggregateReport {
  MeanStd micro;
  MeanStd macro;
};

/// Mean and spread of repeated runs of the same task and split.
inline AggregateReport aggregate_runs(const std::vector<EvalReport>& runs) {
  std::vector<double> mi, ma;
  for (const auto& r : runs) {
    mi.push_back(r.micro_f1);
    ma.push_back(r.macro_f1);
  }
  return {mean_std(mi), mean_std(ma)};
}

}  // namespace hetsann
