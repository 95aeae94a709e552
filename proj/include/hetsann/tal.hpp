// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Type-aware attention layer (TAL).
//
// Per head m and edge e = (i, j, r) with q = type(j), p = type(i):
//   h^_{q,i} = W_{q,p} h_i                                   (projection)
//   o_e      = LeakyReLU(f_r(h^_{q,j}, h^_{q,i}))             (edge score)
//   alpha_e  = softmax of o over the in-edges E_j
//   h_j^m    = ELU(sum_{e in E_j} alpha_e h^_{q,i})
// The layer output concatenates the heads and optionally adds h_j (residual).
//
// Two scoring forms:
//   concat  f_r = [h^_{q,j} || h^_{q,i}] . a_r,        |a_r| = 2 n_q
//   voices  f_r = h^_{q,j} . (h^_{q,i} + a_r),         |a_r| = n_q
// In voices mode a relation and its reverse share one stored vector and the
// reverse uses its negation. Unpaired relations (self-loops, self-reverse
// relations) always own an independent vector.

#include <cstddef>
#include <algorithm>
#include <map>
#include <set>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetsann/autodiff.hpp"
#include "hetsann/error.hpp"
#include "hetsann/graph.hpp"
#include "hetsann/params.hpp"

namespace hetsann {

enum class ScoreMode { kConcat, kVoices };

inline const char* to_string(ScoreMode m) { return m == ScoreMode::kConcat ? "concat" : "voices"; }

/// Attention vector of one relation: a stored parameter and the sign it is
/// used with (-1 for the reversed voice).
struct AttentionRef {
  std::size_t param = 0;
  double sign = 1.0;
};

struct TalHeadParams {
  std::map<std::pair<TypeId, TypeId>, std::size_t> transform;  // (dst, src) -> W_{dst,src}
  std::map<TypeId, std::size_t> inverse;                       // type -> pseudo-inverse of W_{p,p}
  std::vector<AttentionRef> attention;                         // indexed by relation id

  std::size_t W(TypeId dst, TypeId src) const { return transform.at({dst, src}); }
  bool has_transform(TypeId dst, TypeId src) const { return transform.count({dst, src}) > 0; }
};

struct TalLayer {
  std::size_t index = 0;                // 1-based layer number
  std::vector<std::size_t> in_dims;     // n^(l)_p per type
  std::vector<std::size_t> head_dims;   // n^(l+1,m)_p per type
  std::vector<TalHeadParams> heads;
  ScoreMode score_mode = ScoreMode::kConcat;
  bool use_residual = false;
  double leaky_slope = 0.2;

  std::size_t out_dim(TypeId t) const { return heads.size() * head_dims.at(static_cast<std::size_t>(t)); }

  /// Stored attention parameters, counting each shared voice pair once.
  std::size_t independent_attention_vectors() const {
    if (heads.empty()) return 0;
    std::vector<std::size_t> ids;
    for (const auto& a : heads.front().attention) ids.push_back(a.param);
    std::sort(ids.begin(), ids.end());
    return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
  }
};

struct TalLayerOptions {
  std::size_t num_heads = 8;
  std::size_t head_dim = 8;
  ScoreMode score_mode = ScoreMode::kConcat;
  bool use_residual = false;
  double leaky_slope = 0.2;
  bool with_inverse = false;  // allocate pseudo-inverses for the cycle loss
};

/// Allocates and initializes one layer's parameters in store: Glorot-uniform
/// transforms, zero attention vectors, identity pseudo-inverses. Transforms
/// exist only for (dst, src) type pairs realized by some relation.
inline TalLayer make_tal_layer(const HetGraph& g, ParamStore& store, std::size_t index,
                               const std::vector<std::size_t>& in_dims, const TalLayerOptions& opt,
                               std::mt19937_64& rng) {
  if (!g.has_self_loops()) throw std::logic_error("make_tal_layer: graph needs self-loops");
  if (in_dims.size() != g.num_types()) throw ConfigError("layer input dims must be given per node type");
  if (opt.num_heads == 0 || opt.head_dim == 0) throw ConfigError("heads and head_dim must be positive");
  if (!(opt.leaky_slope > 0.0 && opt.leaky_slope < 1.0)) throw ConfigError("leaky_slope must be in (0, 1)");

  TalLayer layer;
  layer.index = index;
  layer.in_dims = in_dims;
  layer.head_dims.assign(g.num_types(), opt.head_dim);
  layer.score_mode = opt.score_mode;
  layer.use_residual = opt.use_residual;
  layer.leaky_slope = opt.leaky_slope;
  if (opt.use_residual) {
    for (std::size_t t = 0; t < g.num_types(); ++t) {
      const std::size_t out = opt.num_heads * layer.head_dims[t];
      if (out != in_dims[t]) {
        throw ConfigError("layer " + std::to_string(index) + ": residual needs output dim " +
                          std::to_string(out) + " == input dim " +
                          std::to_string(in_dims[t]) + " for type '" + g.node_type(static_cast<TypeId>(t)).name +
                          "'");
      }
    }
  }

  std::set<std::pair<TypeId, TypeId>> pairs;
  for (const auto& r : g.relations()) pairs.insert({r.dst_type, r.src_type});

  const std::string prefix = "layer" + std::to_string(index) + ".";
  for (std::size_t m = 0; m < opt.num_heads; ++m) {
    TalHeadParams head;
    const std::string hp = prefix + "head" + std::to_string(m) + ".";
    for (const auto& [dst, src] : pairs) {
      const std::size_t rows = layer.head_dims[static_cast<std::size_t>(dst)];
      const std::size_t cols = in_dims[static_cast<std::size_t>(src)];
      head.transform[{dst, src}] =
          store.add(hp + "W." + g.node_type(dst).name + "<-" + g.node_type(src).name, glorot_uniform(rows, cols, rng));
    }
    if (opt.with_inverse) {
      for (std::size_t t = 0; t < g.num_types(); ++t) {
        const auto p = static_cast<TypeId>(t);
        head.inverse[p] = store.add(hp + "Winv." + g.node_type(p).name,
                                    Tensor::identity(in_dims[t], layer.head_dims[t]), /*regularized=*/false);
      }
    }
    head.attention.resize(g.num_relations());
    for (const auto& r : g.relations()) {
      const std::size_t n = layer.head_dims[static_cast<std::size_t>(r.dst_type)];
      const bool shared = opt.score_mode == ScoreMode::kVoices && r.is_paired() && !r.is_self_loop;
      if (shared && !r.is_canonical()) continue;  // filled from its canonical partner below
      const std::size_t len = opt.score_mode == ScoreMode::kConcat ? 2 * n : n;
      const std::size_t id = store.add(hp + "a." + r.name, Tensor(len, 1));
      head.attention[static_cast<std::size_t>(r.id)] = {id, 1.0};
      if (shared) head.attention[static_cast<std::size_t>(r.reverse_id)] = {id, -1.0};
    }
    layer.heads.push_back(std::move(head));
  }
  return layer;
}

/// Attention vector of relation r in head m as used by the layer. In voices
/// mode a reversed relation yields the exact negation of its partner's.
inline Tensor materialized_attention(const TalLayer& layer, const ParamStore& store, std::size_t head, RelationId r) {
  const AttentionRef& ref = layer.heads.at(head).attention.at(static_cast<std::size_t>(r));
  Tensor a = store[ref.param].value;
  if (ref.sign < 0.0) {
    for (auto& v : a.data()) v = -v;
  }
  return a;
}

/// Per-edge attention weights of one layer: alpha[head][edge index].
using AttentionTrace = std::vector<std::vector<double>>;

/// One TAL over the whole graph. states[p] holds h^(l) for type p
/// (count_p x in_dim_p). Dropout, when training, is applied to the inputs.
inline std::vector<Var> tal_forward(const HetGraph& g, const std::vector<Var>& states, const TalLayer& layer,
                                    const BoundParams& params, bool training, double dropout_rate,
                                    std::mt19937_64& rng, AttentionTrace* trace = nullptr) {
  if (!g.has_self_loops()) throw std::logic_error("tal_forward: graph needs self-loops");
  if (states.size() != g.num_types()) throw ShapeError("tal_forward: one state matrix per type required");
  for (std::size_t t = 0; t < g.num_types(); ++t) {
    const auto p = static_cast<TypeId>(t);
    if (states[t].rows() != g.type_count(p) || states[t].cols() != layer.in_dims[t]) {
      throw ShapeError("tal_forward: state of type '" + g.node_type(p).name + "' is " +
                       states[t].value().shape_string() + ", expected [" + std::to_string(g.type_count(p)) + "x" +
                       std::to_string(layer.in_dims[t]) + "]");
    }
  }

  std::vector<Var> inputs;
  inputs.reserve(states.size());
  for (const Var& s : states) inputs.push_back(dropout(s, dropout_rate, rng, training));

  // Edge layout per destination type: relation-grouped, with local indices.
  struct RelationEdges {
    const RelationType* rel;
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;
    std::vector<std::size_t> edge_ids;
  };
  std::vector<std::vector<RelationEdges>> by_dst(g.num_types());
  for (const auto& r : g.relations()) {
    const auto& ids = g.edges_of_relation(r.id);
    if (ids.empty()) continue;
    RelationEdges re{&r, {}, {}, ids};
    for (std::size_t e : ids) {
      re.src.push_back(g.local_index(g.edges()[e].src));
      re.dst.push_back(g.local_index(g.edges()[e].dst));
    }
    by_dst[static_cast<std::size_t>(r.dst_type)].push_back(std::move(re));
  }

  if (trace != nullptr) trace->assign(layer.heads.size(), std::vector<double>(g.num_edges(), 0.0));

  std::vector<std::vector<Var>> head_out(g.num_types());
  for (std::size_t m = 0; m < layer.heads.size(); ++m) {
    const TalHeadParams& head = layer.heads[m];

    // Project every source type once per realized (dst, src) pair.
    std::map<std::pair<TypeId, TypeId>, Var> projected;
    for (const auto& [key, pid] : head.transform) {
      const std::size_t src = static_cast<std::size_t>(key.second);
      if (g.type_count(key.second) == 0) continue;
      projected.emplace(key, matmul(inputs[src], transpose(params[pid])));
    }

    for (std::size_t q = 0; q < g.num_types(); ++q) {
      const auto dst_type = static_cast<TypeId>(q);
      const std::size_t n_q = g.type_count(dst_type);
      if (n_q == 0) continue;
      const Var& self_proj = projected.at({dst_type, dst_type});

      std::vector<Var> scores;
      std::vector<Var> messages;
      std::vector<std::size_t> segments;
      std::vector<std::size_t> edge_order;
      for (const RelationEdges& re : by_dst[q]) {
        const RelationType& r = *re.rel;
        Var msg = gather_rows(projected.at({r.dst_type, r.src_type}), re.src);
        Var tgt = gather_rows(self_proj, re.dst);
        const AttentionRef& ref = head.attention[static_cast<std::size_t>(r.id)];
        Var a = params[ref.param];
        if (ref.sign < 0.0) a = scale(a, -1.0);
        Var raw;
        if (layer.score_mode == ScoreMode::kConcat) {
          raw = matmul(concat({tgt, msg}, 1), a);
        } else {
          raw = row_dot(tgt, add_row(msg, transpose(a)));
        }
        scores.push_back(leaky_relu(raw, layer.leaky_slope));
        messages.push_back(msg);
        segments.insert(segments.end(), re.dst.begin(), re.dst.end());
        edge_order.insert(edge_order.end(), re.edge_ids.begin(), re.edge_ids.end());
      }
      Var alpha = segment_softmax(concat(scores, 0), segments, n_q);
      Var weighted = mul_col(concat(messages, 0), alpha);
      head_out[q].push_back(elu(segment_sum(weighted, segments, n_q)));

      if (trace != nullptr) {
        for (std::size_t k = 0; k < edge_order.size(); ++k) (*trace)[m][edge_order[k]] = alpha.value()[k];
      }
    }
  }

  std::vector<Var> out(g.num_types());
  for (std::size_t q = 0; q < g.num_types(); ++q) {
    const auto t = static_cast<TypeId>(q);
    if (g.type_count(t) == 0) {
      out[q] = states[q].tape->constant(Tensor(0, layer.out_dim(t)));
      continue;
    }
    Var h = head_out[q].size() == 1 ? head_out[q].front() : concat(head_out[q], 1);
    out[q] = layer.use_residual ? add(states[q], h) : h;
  }
  return out;
}

// Single-vector forms of the layer's building blocks.

/// W h for a single state vector h (n x 1).
inline Tensor transform(const Tensor& W, const Tensor& h) {
  if (h.cols() != 1 || W.cols() != h.rows()) {
    throw ShapeError("transform: " + W.shape_string() + " x " + h.shape_string());
  }
  return kernels::mm(W, h);
}

inline double attention_score_concat(std::span<const double> h_dst, std::span<const double> h_src,
                                     std::span<const double> a, double slope) {
  if (a.size() != h_dst.size() + h_src.size()) throw ShapeError("attention_score_concat: |a| != |h_j| + |h_i|");
  double s = 0.0;
  for (std::size_t k = 0; k < h_dst.size(); ++k) s += h_dst[k] * a[k];
  for (std::size_t k = 0; k < h_src.size(); ++k) s += h_src[k] * a[h_dst.size() + k];
  return s > 0.0 ? s : slope * s;
}

inline double attention_score_voices(std::span<const double> h_dst, std::span<const double> h_src,
                                     std::span<const double> a, double sign, double slope) {
  if (a.size() != h_dst.size() || h_src.size() != h_dst.size()) {
    throw ShapeError("attention_score_voices: |a|, |h_j|, |h_i| must agree");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < h_dst.size(); ++k) s += h_dst[k] * (h_src[k] + sign * a[k]);
  return s > 0.0 ? s : slope * s;
}

/// Softmax of edge scores within each destination's in-edge group.
inline std::vector<double> normalize_attention(const std::vector<double>& scores,
                                               const std::vector<std::size_t>& dst, std::size_t num_nodes) {
  Tape tape;
  Var s = tape.constant(Tensor::column(scores));
  return segment_softmax(s, dst, num_nodes).value().data();
}

/// ELU(sum_e alpha_e m_e) per destination; messages are E x d.
inline Tensor aggregate(const std::vector<double>& alpha, const Tensor& messages, const std::vector<std::size_t>& dst,
                        std::size_t num_nodes) {
  Tape tape;
  Var w = mul_col(tape.constant(messages), tape.constant(Tensor::column(alpha)));
  return elu(segment_sum(w, dst, num_nodes)).value();
}

}  // namespace hetsann
