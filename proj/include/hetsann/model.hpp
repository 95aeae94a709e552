// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hetsann/autodiff.hpp"
#include "hetsann/error.hpp"
#include "hetsann/graph.hpp"
#include "hetsann/params.hpp"
#include "hetsann/tal.hpp"

namespace hetsann {

/// Architecture, extension switches and loss weights.
struct ModelConfig {
  std::size_t layers = 3;
  std::size_t heads = 8;
  std::size_t head_dim = 8;
  ScoreMode score_mode = ScoreMode::kConcat;  // kVoices is the ".R" variant
  bool multi_task = false;                    // ".M"
  bool cycle = false;                         // ".V"
  double beta1 = 1e-3;
  double beta2 = 1e-5;
  double leaky_slope = 0.2;
  double dropout = 0.6;
  double reg_weight = 5e-4;
  bool residual = true;                   // applied where input dim == output dim
  std::vector<std::size_t> cycle_layers;  // 1-based; empty means every layer
  ColdStart cold_start = ColdStart::kOneHot;

  void validate() const {
    if (layers == 0) throw ConfigError("layers must be >= 1");
    if (heads == 0) throw ConfigError("heads must be >= 1");
    if (head_dim == 0) throw ConfigError("head_dim must be >= 1");
    if (beta1 < 0.0 || beta2 < 0.0) throw ConfigError("beta1 and beta2 must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    if (reg_weight < 0.0) throw ConfigError("reg_weight must be >= 0");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must be in (0, 1)");
    for (std::size_t l : cycle_layers) {
      if (l == 0 || l > layers) throw ConfigError("cycle_layers entry " + std::to_string(l) + " out of range");
    }
  }
};

/// Extension switches named by the variant suffixes: M (multi-task),
/// R (voices-sharing attention), V (cycle-consistency loss).
struct Variant {
  bool multi_task = false;
  bool voices = false;
  bool cycle = false;

  /// Accepts "base" or any combination of the letters m, r, v.
  static Variant parse(const std::string& s) {
    Variant v;
    if (s == "base" || s.empty()) return v;
    for (char c : s) {
      switch (c) {
        case 'm': case 'M': v.multi_task = true; break;
        case 'r': case 'R': v.voices = true; break;
        case 'v': case 'V': v.cycle = true; break;
        case '.': break;
        default: throw ConfigError("unknown variant '" + s + "' (use base or letters m, r, v)");
      }
    }
    return v;
  }

  std::string name() const {
    std::string s = "HetSANN";
    if (multi_task) s += ".M";
    if (voices) s += ".R";
    if (cycle) s += ".V";
    return s;
  }

  std::string code() const {
    std::string s;
    if (multi_task) s += 'm';
    if (voices) s += 'r';
    if (cycle) s += 'v';
    return s.empty() ? "base" : s;
  }

  void apply(ModelConfig& cfg) const {
    cfg.multi_task = multi_task;
    cfg.score_mode = voices ? ScoreMode::kVoices : ScoreMode::kConcat;
    cfg.cycle = cycle;
  }
};

/// One node-classification head: affine map to class logits.
struct Classifier {
  TypeId type = 0;
  std::size_t num_classes = 0;
  std::size_t weight = 0;  // final_dim x classes
  std::size_t bias = 0;    // 1 x classes
};

/// Stacked TALs plus per-type classifiers. Owns its parameters.
class HetSannModel {
 public:
  /// tasks[0] is the main task; further entries are auxiliary (multi-task).
  HetSannModel(const HetGraph& g, ModelConfig cfg, std::vector<TypeId> tasks, std::uint64_t seed)
      : cfg_(std::move(cfg)), tasks_(std::move(tasks)) {
    cfg_.validate();
    if (!g.has_self_loops()) throw std::logic_error("HetSannModel: graph needs self-loops");
    if (tasks_.empty()) throw ConfigError("at least one classification task is required");
    if (!cfg_.multi_task && tasks_.size() > 1) throw ConfigError("several tasks given but multi-task is off");
    for (TypeId t : tasks_) {
      if (t < 0 || static_cast<std::size_t>(t) >= g.num_types()) throw ConfigError("task type out of range");
      if (g.num_classes(t) == 0) throw ConfigError("task type '" + g.node_type(t).name + "' has no labels");
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> dims;
    for (const auto& t : g.node_types()) dims.push_back(t.feature_dim);
    for (std::size_t l = 1; l <= cfg_.layers; ++l) {
      TalLayerOptions opt;
      opt.num_heads = cfg_.heads;
      opt.head_dim = cfg_.head_dim;
      opt.score_mode = cfg_.score_mode;
      opt.leaky_slope = cfg_.leaky_slope;
      opt.with_inverse = cfg_.cycle;
      const std::size_t out = cfg_.heads * cfg_.head_dim;
      opt.use_residual = cfg_.residual && std::all_of(dims.begin(), dims.end(), [out](std::size_t d) { return d == out; });
      layers_.push_back(make_tal_layer(g, store_, l, dims, opt, rng));
      dims.assign(g.num_types(), out);
    }
    for (TypeId t : tasks_) {
      Classifier c;
      c.type = t;
      c.num_classes = g.num_classes(t);
      const std::string name = "cls." + g.node_type(t).name;
      c.weight = store_.add(name + ".W", glorot_uniform(dims[static_cast<std::size_t>(t)], c.num_classes, rng));
      c.bias = store_.add(name + ".b", Tensor(1, c.num_classes));
      classifiers_.push_back(c);
    }
  }

  const ModelConfig& config() const noexcept { return cfg_; }
  const std::vector<TalLayer>& layers() const noexcept { return layers_; }
  const std::vector<Classifier>& classifiers() const noexcept { return classifiers_; }
  const std::vector<TypeId>& tasks() const noexcept { return tasks_; }
  ParamStore& params() noexcept { return store_; }
  const ParamStore& params() const noexcept { return store_; }

 private:
  ModelConfig cfg_;
  std::vector<TypeId> tasks_;
  ParamStore store_;
  std::vector<TalLayer> layers_;
  std::vector<Classifier> classifiers_;
};

struct ForwardResult {
  std::vector<std::vector<Var>> layer_inputs;  // [l][type] = h^(l), before dropout
  std::vector<Var> final_states;               // [type] = h^(L)
  std::vector<Var> logits;                     // [task]
  std::vector<AttentionTrace> attention;       // [l], filled when requested
};

/// Runs all layers and classifiers on one tape.
inline ForwardResult forward(Tape& tape, const HetGraph& g, const HetSannModel& model, const BoundParams& params,
                             bool training, std::mt19937_64& rng, bool trace_attention = false) {
  ForwardResult out;
  std::vector<Var> h;
  for (std::size_t t = 0; t < g.num_types(); ++t) h.push_back(tape.constant(g.features(static_cast<TypeId>(t))));
  const double rate = model.config().dropout;
  for (const TalLayer& layer : model.layers()) {
    out.layer_inputs.push_back(h);
    AttentionTrace* trace = nullptr;
    if (trace_attention) trace = &out.attention.emplace_back();
    h = tal_forward(g, h, layer, params, training, rate, rng, trace);
  }
  out.final_states = h;
  for (const Classifier& c : model.classifiers()) {
    Var z = matmul(h[static_cast<std::size_t>(c.type)], params[c.weight]);
    out.logits.push_back(add_row(z, params[c.bias]));
  }
  return out;
}

/// Mean cross-entropy over the masked (local) node indices.
inline Var classification_loss(Var logits, const std::vector<int>& labels, const std::vector<std::size_t>& mask) {
  if (mask.empty()) throw std::invalid_argument("classification_loss: empty mask");
  return softmax_cross_entropy(logits, labels, mask);
}

/// Unweighted sum of the per-task losses.
inline Var multi_task_loss(const std::vector<Var>& task_losses) {
  if (task_losses.empty()) throw std::invalid_argument("multi_task_loss: no tasks");
  Var total = task_losses.front();
  for (std::size_t k = 1; k < task_losses.size(); ++k) total = add(total, task_losses[k]);
  return total;
}

/// Unweighted cycle-consistency terms.
///   match:   mean over (layer, head, ordered type pair (p_i, p_j), p_i == p_j
///            included) of the
///            mean squared residual W_{j,i} W~_{i} W_{i,j} h_j - W_{j,j} h_j
///            over nodes of type p_j and coordinates
///   inverse: mean over (layer, head, type) of mean((W~W - I)^2) + mean((W W~ - I)^2)
struct CycleTerms {
  Var match;
  Var inverse;
};

inline bool cycle_applies_to(const ModelConfig& cfg, std::size_t layer_index) {
  return cfg.cycle_layers.empty() ||
         std::find(cfg.cycle_layers.begin(), cfg.cycle_layers.end(), layer_index) != cfg.cycle_layers.end();
}

inline CycleTerms cycle_terms(Tape& tape, const HetGraph& g, const HetSannModel& model, const BoundParams& params,
                              const std::vector<std::vector<Var>>& layer_inputs) {
  if (!model.config().cycle) throw std::logic_error("cycle_terms: model has no pseudo-inverses (V off)");
  std::vector<Var> match_parts;
  std::vector<Var> inverse_parts;
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const TalLayer& layer = model.layers()[l];
    if (!cycle_applies_to(model.config(), layer.index)) continue;
    for (const TalHeadParams& head : layer.heads) {
      if (head.inverse.empty()) throw std::logic_error("cycle_terms: missing pseudo-inverse");
      for (std::size_t a = 0; a < g.num_types(); ++a) {
        const auto pi = static_cast<TypeId>(a);
        Var inv = params[head.inverse.at(pi)];
        Var w = params[head.W(pi, pi)];
        const Tensor& wv = w.value();
        Var left = sub(matmul(inv, w), tape.constant(Tensor::identity(wv.cols())));
        Var right = sub(matmul(w, inv), tape.constant(Tensor::identity(wv.rows())));
        inverse_parts.push_back(add(mean(square(left)), mean(square(right))));

        for (std::size_t b = 0; b < g.num_types(); ++b) {
          const auto pj = static_cast<TypeId>(b);
          if (g.type_count(pj) == 0) continue;
          if (!head.has_transform(pi, pj) || !head.has_transform(pj, pi)) continue;
          Var h = layer_inputs[l][b];
          // Row-vector form: (W_ji W~_i W_ij h)^T = h^T W_ij^T W~_i^T W_ji^T.
          Var there = matmul(h, transpose(params[head.W(pi, pj)]));
          Var back = matmul(matmul(there, transpose(inv)), transpose(params[head.W(pj, pi)]));
          Var direct = matmul(h, transpose(params[head.W(pj, pj)]));
          match_parts.push_back(mean(square(sub(back, direct))));
        }
      }
    }
  }
  auto average = [&tape](const std::vector<Var>& parts) {
    if (parts.empty()) return tape.constant(Tensor::scalar(0.0));
    Var s = parts.front();
    for (std::size_t k = 1; k < parts.size(); ++k) s = add(s, parts[k]);
    return scale(s, 1.0 / static_cast<double>(parts.size()));
  };
  return {average(match_parts), average(inverse_parts)};
}

/// beta1 * match + beta2 * inverse.
inline Var cycle_loss(Tape& tape, const HetGraph& g, const HetSannModel& model, const BoundParams& params,
                      const std::vector<std::vector<Var>>& layer_inputs) {
  CycleTerms c = cycle_terms(tape, g, model, params, layer_inputs);
  return add(scale(c.match, model.config().beta1), scale(c.inverse, model.config().beta2));
}

/// weight * sum of squares over every regularized parameter.
inline Var l2_penalty(Tape& tape, const ParamStore& store, const BoundParams& params, double weight) {
  Var total = tape.constant(Tensor::scalar(0.0));
  bool first = true;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!store[i].regularized) continue;
    Var s = sum(square(params[i]));
    total = first ? s : add(total, s);
    first = false;
  }
  return scale(total, weight);
}

/// Value of the unweighted inverse term, mean over layers, heads and types of
/// mean((W~W - I)^2) + mean((W W~ - I)^2); needs V.
inline double inverse_residual(const HetSannModel& model) {
  auto mse_from_identity = [](const Tensor& prod) {
    double s = 0.0;
    for (std::size_t r = 0; r < prod.rows(); ++r) {
      for (std::size_t c = 0; c < prod.cols(); ++c) {
        const double d = prod(r, c) - (r == c ? 1.0 : 0.0);
        s += d * d;
      }
    }
    return s / static_cast<double>(prod.size());
  };
  double total = 0.0;
  std::size_t n = 0;
  for (const TalLayer& layer : model.layers()) {
    if (!cycle_applies_to(model.config(), layer.index)) continue;
    for (const TalHeadParams& head : layer.heads) {
      for (const auto& [p, inv_id] : head.inverse) {
        const Tensor& w = model.params()[head.W(p, p)].value;
        const Tensor& inv = model.params()[inv_id].value;
        total += mse_from_identity(kernels::mm(inv, w)) + mse_from_identity(kernels::mm(w, inv));
        ++n;
      }
    }
  }
  if (n == 0) throw std::logic_error("inverse_residual: model has no pseudo-inverses");
  return total / static_cast<double>(n);
}

/// Node subsets per task, as local indices within the task's type.
struct TaskMasks {
  std::vector<std::vector<std::size_t>> per_task;
};

struct LossBreakdown {
  std::vector<double> class_loss;  // per task
  double cycle_match = 0.0;        // unweighted
  double cycle_inverse = 0.0;      // unweighted
  double cycle = 0.0;              // beta-weighted sum
  double l2 = 0.0;
  double total = 0.0;

  double class_total() const {
    double s = 0.0;
    for (double c : class_loss) s += c;
    return s;
  }
};

struct LossGraph {
  Var total;
  LossBreakdown breakdown;
};

/// class + (V ? beta1 * match + beta2 * inverse : 0) + l2, built on the tape
/// of an existing forward pass.
inline LossGraph total_loss(Tape& tape, const HetGraph& g, const HetSannModel& model, const BoundParams& params,
                            const ForwardResult& fwd, const TaskMasks& masks) {
  const auto& cls = model.classifiers();
  if (masks.per_task.size() != cls.size()) throw std::invalid_argument("total_loss: one mask per task required");
  LossGraph out;
  std::vector<Var> task_losses;
  for (std::size_t k = 0; k < cls.size(); ++k) {
    Var lk = classification_loss(fwd.logits[k], g.labels(cls[k].type), masks.per_task[k]);
    out.breakdown.class_loss.push_back(lk.value().item());
    task_losses.push_back(lk);
  }
  Var total = model.config().multi_task ? multi_task_loss(task_losses) : task_losses.front();
  const ModelConfig& cfg = model.config();
  if (cfg.cycle) {
    CycleTerms c = cycle_terms(tape, g, model, params, fwd.layer_inputs);
    Var weighted_match = scale(c.match, cfg.beta1);
    Var weighted_inverse = scale(c.inverse, cfg.beta2);
    total = add(add(total, weighted_match), weighted_inverse);
    out.breakdown.cycle_match = c.match.value().item();
    out.breakdown.cycle_inverse = c.inverse.value().item();
    out.breakdown.cycle = weighted_match.value().item() + weighted_inverse.value().item();
  }
  Var l2 = l2_penalty(tape, model.params(), params, cfg.reg_weight);
  out.breakdown.l2 = l2.value().item();
  total = add(total, l2);
  out.breakdown.total = total.value().item();
  out.total = total;
  return out;
}

/// Argmax per row; ties go to the lowest class index.
inline std::vector<int> predict(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace hetsann
