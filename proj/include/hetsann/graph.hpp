// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hetsann/error.hpp"
#include "hetsann/tensor.hpp"

namespace hetsann {

using NodeId = std::size_t;
using TypeId = int;
using RelationId = int;

struct NodeType {
  TypeId id = 0;
  std::string name;
  std::size_t feature_dim = 0;
};

struct RelationType {
  RelationId id = 0;
  std::string name;
  TypeId src_type = 0;
  TypeId dst_type = 0;
  RelationId reverse_id = 0;
  bool is_self_loop = false;

  /// Relation and reverse are distinct, so voices-sharing can tie them.
  bool is_paired() const noexcept { return reverse_id != id; }
  /// The member of a pair that owns the shared parameters.
  bool is_canonical() const noexcept { return id <= reverse_id; }
};

struct EdgeTriplet {
  NodeId src = 0;
  NodeId dst = 0;
  RelationId rel = 0;

  friend auto operator<=>(const EdgeTriplet&, const EdgeTriplet&) = default;
};

/// Layer-0 state for node types that carry no attribute features.
enum class ColdStart { kZeros, kOneHot };

// Input records consumed by build_graph. Names are resolved at build time.
struct NodeSpec {
  std::string name;
  std::string type;
  std::optional<std::string> label;
  std::vector<double> features;  // empty: cold-start policy applies
};

struct EdgeSpec {
  std::string src;
  std::string dst;
  std::string relation;
};

struct RelationSpec {
  std::string name;
  std::string src_type;
  std::string dst_type;
  std::string reverse;
};

/// Known class names per node type. Labels outside it are rejected.
using LabelVocab = std::map<std::string, std::vector<std::string>>;

struct BuildOptions {
  ColdStart cold_start = ColdStart::kOneHot;
  const LabelVocab* vocab = nullptr;
  bool warn_duplicates = true;
};

/// Immutable typed multigraph. Global node ids are type-major: all nodes of
/// type 0 first, then type 1, and so on, so per-type slices are contiguous.
class HetGraph {
 public:
  HetGraph() = default;

  std::size_t num_types() const noexcept { return node_types_.size(); }
  std::size_t num_relations() const noexcept { return relations_.size(); }
  std::size_t num_nodes() const noexcept { return node_names_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  const std::vector<NodeType>& node_types() const noexcept { return node_types_; }
  const std::vector<RelationType>& relations() const noexcept { return relations_; }
  const std::vector<EdgeTriplet>& edges() const noexcept { return edges_; }
  const NodeType& node_type(TypeId t) const { return node_types_.at(static_cast<std::size_t>(t)); }
  const RelationType& relation(RelationId r) const { return relations_.at(static_cast<std::size_t>(r)); }

  std::size_t type_count(TypeId t) const { return type_counts_.at(static_cast<std::size_t>(t)); }
  NodeId type_offset(TypeId t) const { return type_offsets_.at(static_cast<std::size_t>(t)); }
  TypeId type_of(NodeId v) const { return node_type_of_.at(v); }
  std::size_t local_index(NodeId v) const { return v - type_offset(type_of(v)); }
  NodeId global_id(TypeId t, std::size_t local) const { return type_offset(t) + local; }
  const std::string& node_name(NodeId v) const { return node_names_.at(v); }

  std::optional<NodeId> find_node(const std::string& name) const {
    auto it = node_index_.find(name);
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<TypeId> find_type(const std::string& name) const {
    for (const auto& t : node_types_) {
      if (t.name == name) return t.id;
    }
    return std::nullopt;
  }
  std::optional<RelationId> find_relation(const std::string& name) const {
    for (const auto& r : relations_) {
      if (r.name == name) return r.id;
    }
    return std::nullopt;
  }

  /// Edge indices whose destination is j (the set E_j).
  std::span<const std::size_t> in_edge_indices(NodeId j) const {
    if (j >= num_nodes()) throw std::out_of_range("in_edges: invalid node id " + std::to_string(j));
    return {in_index_.data() + in_offsets_[j], in_offsets_[j + 1] - in_offsets_[j]};
  }

  /// All edges with dst = j, in edge-index order.
  std::vector<EdgeTriplet> in_edges(NodeId j) const {
    std::vector<EdgeTriplet> out;
    for (std::size_t e : in_edge_indices(j)) out.push_back(edges_[e]);
    return out;
  }

  /// Edge indices grouped by relation, each group in edge-index order.
  const std::vector<std::size_t>& edges_of_relation(RelationId r) const {
    return edges_by_relation_.at(static_cast<std::size_t>(r));
  }

  /// Cold-start states h^(0) of type t: type_count(t) x feature_dim.
  const Tensor& features(TypeId t) const { return features_.at(static_cast<std::size_t>(t)); }
  /// False when the type's features were synthesized by the cold-start policy.
  bool has_attributes(TypeId t) const { return attributed_.at(static_cast<std::size_t>(t)); }

  /// Per-node class index of type t, -1 when unlabeled.
  const std::vector<int>& labels(TypeId t) const { return labels_.at(static_cast<std::size_t>(t)); }
  const std::vector<std::string>& class_names(TypeId t) const {
    return class_names_.at(static_cast<std::size_t>(t));
  }
  std::size_t num_classes(TypeId t) const { return class_names(t).size(); }
  bool has_labels(TypeId t) const {
    const auto& l = labels(t);
    return std::any_of(l.begin(), l.end(), [](int c) { return c >= 0; });
  }

  bool has_self_loops() const noexcept {
    return std::any_of(relations_.begin(), relations_.end(), [](const RelationType& r) { return r.is_self_loop; });
  }

  /// Self-loop relation of type t; requires add_self_loops.
  RelationId self_loop_relation(TypeId t) const {
    for (const auto& r : relations_) {
      if (r.is_self_loop && r.src_type == t) return r.id;
    }
    throw std::logic_error("graph has no self-loop relation for type " + node_type(t).name);
  }

  friend HetGraph build_graph(const std::vector<NodeSpec>&, const std::vector<EdgeSpec>&,
                              const std::vector<RelationSpec>&, const BuildOptions&);
  friend HetGraph add_self_loops(const HetGraph&);
  friend HetGraph permute_within_types(const HetGraph&, const std::vector<std::vector<std::size_t>>&);

 private:
  void index_edges() {
    const std::size_t n = num_nodes();
    in_offsets_.assign(n + 1, 0);
    for (const auto& e : edges_) ++in_offsets_[e.dst + 1];
    for (std::size_t j = 0; j < n; ++j) in_offsets_[j + 1] += in_offsets_[j];
    in_index_.assign(edges_.size(), 0);
    std::vector<std::size_t> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
    for (std::size_t e = 0; e < edges_.size(); ++e) in_index_[cursor[edges_[e].dst]++] = e;

    edges_by_relation_.assign(relations_.size(), {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      edges_by_relation_[static_cast<std::size_t>(edges_[e].rel)].push_back(e);
    }
  }

  std::vector<NodeType> node_types_;
  std::vector<RelationType> relations_;
  std::vector<std::size_t> type_counts_;
  std::vector<NodeId> type_offsets_;
  std::vector<TypeId> node_type_of_;
  std::vector<std::string> node_names_;
  std::unordered_map<std::string, NodeId> node_index_;
  std::vector<EdgeTriplet> edges_;
  std::vector<std::size_t> in_offsets_;
  std::vector<std::size_t> in_index_;
  std::vector<std::vector<std::size_t>> edges_by_relation_;
  std::vector<Tensor> features_;
  std::vector<bool> attributed_;
  std::vector<std::vector<int>> labels_;
  std::vector<std::vector<std::string>> class_names_;
};

/// Builds a graph from named records. Reverse edges missing from the input
/// are synthesized; relations whose reverse is not declared get a reverse
/// relation with swapped endpoint types. Duplicate (i, j, r) input triplets
/// are dropped with a warning on stderr.
inline HetGraph build_graph(const std::vector<NodeSpec>& node_specs, const std::vector<EdgeSpec>& edge_list,
                            const std::vector<RelationSpec>& relation_pairs, const BuildOptions& opts = {}) {
  HetGraph g;

  // Node types in first-appearance order: nodes first, then relation endpoints.
  std::map<std::string, TypeId> type_ids;
  auto intern_type = [&](const std::string& name) {
    auto [it, inserted] = type_ids.try_emplace(name, static_cast<TypeId>(g.node_types_.size()));
    if (inserted) g.node_types_.push_back({it->second, name, 0});
    return it->second;
  };
  for (const auto& n : node_specs) intern_type(n.type);
  auto type_of_name = [&](const std::string& name) {
    auto it = type_ids.find(name);
    if (it == type_ids.end()) throw DataError("unknown node type '" + name + "'");
    return it->second;
  };
  for (const auto& r : relation_pairs) {
    intern_type(r.src_type);
    intern_type(r.dst_type);
  }

  // Relations: each declared relation, followed by its synthesized reverse if
  // the reverse is never declared on its own.
  std::map<std::string, const RelationSpec*> declared;
  for (const auto& r : relation_pairs) {
    if (r.name.empty()) throw DataError("relation with empty name");
    if (!declared.emplace(r.name, &r).second) throw DataError("relation '" + r.name + "' declared twice");
  }
  std::map<std::string, RelationId> rel_ids;
  auto add_relation = [&](const std::string& name, TypeId src, TypeId dst) {
    const auto id = static_cast<RelationId>(g.relations_.size());
    g.relations_.push_back({id, name, src, dst, id, false});
    rel_ids.emplace(name, id);
    return id;
  };
  for (const auto& r : relation_pairs) {
    if (rel_ids.count(r.name)) continue;  // already added as someone's reverse
    const TypeId src = type_of_name(r.src_type);
    const TypeId dst = type_of_name(r.dst_type);
    if (r.reverse == r.name) {
      if (src != dst) {
        throw DataError("relation '" + r.name + "' is its own reverse but connects '" + r.src_type + "' to '" +
                        r.dst_type + "'");
      }
      add_relation(r.name, src, dst);
      continue;
    }
    const RelationId fwd = add_relation(r.name, src, dst);
    auto rev_decl = declared.find(r.reverse);
    if (rev_decl != declared.end()) {
      const RelationSpec& rs = *rev_decl->second;
      if (rs.reverse != r.name || rs.src_type != r.dst_type || rs.dst_type != r.src_type) {
        throw DataError("relations '" + r.name + "' and '" + r.reverse + "' are not a consistent reverse pair");
      }
    }
    const RelationId rev = add_relation(r.reverse, dst, src);
    g.relations_[static_cast<std::size_t>(fwd)].reverse_id = rev;
    g.relations_[static_cast<std::size_t>(rev)].reverse_id = fwd;
  }

  // Nodes, type-major.
  const std::size_t num_types = g.node_types_.size();
  g.type_counts_.assign(num_types, 0);
  std::vector<std::vector<const NodeSpec*>> by_type(num_types);
  for (const auto& n : node_specs) {
    if (n.name.empty()) throw DataError("node with empty name");
    by_type[static_cast<std::size_t>(type_of_name(n.type))].push_back(&n);
  }
  g.type_offsets_.assign(num_types, 0);
  for (std::size_t t = 0; t < num_types; ++t) {
    g.type_counts_[t] = by_type[t].size();
    if (t > 0) g.type_offsets_[t] = g.type_offsets_[t - 1] + g.type_counts_[t - 1];
  }
  g.features_.resize(num_types);
  g.attributed_.assign(num_types, false);
  g.labels_.resize(num_types);
  g.class_names_.resize(num_types);
  for (std::size_t t = 0; t < num_types; ++t) {
    const auto& members = by_type[t];
    const std::string& tname = g.node_types_[t].name;
    for (const NodeSpec* n : members) {
      const NodeId id = g.node_names_.size();
      if (!g.node_index_.emplace(n->name, id).second) throw DataError("node '" + n->name + "' declared twice");
      g.node_names_.push_back(n->name);
      g.node_type_of_.push_back(static_cast<TypeId>(t));
    }

    // Features: all-or-nothing per type, one common dimension.
    const bool any_features = std::any_of(members.begin(), members.end(),
                                          [](const NodeSpec* n) { return !n->features.empty(); });
    if (any_features) {
      const std::size_t dim = members.front()->features.size();
      for (const NodeSpec* n : members) {
        if (n->features.size() != dim) {
          throw DataError("inconsistent feature dimension for type '" + tname + "': node '" + n->name + "' has " +
                          std::to_string(n->features.size()) + ", expected " + std::to_string(dim));
        }
      }
      Tensor f(members.size(), dim);
      for (std::size_t i = 0; i < members.size(); ++i) {
        std::copy(members[i]->features.begin(), members[i]->features.end(), f.row(i).begin());
      }
      g.features_[t] = std::move(f);
      g.attributed_[t] = true;
    } else if (opts.cold_start == ColdStart::kOneHot) {
      g.features_[t] = Tensor::identity(members.size());
    } else {
      g.features_[t] = Tensor(members.size(), 1);
    }
    g.node_types_[t].feature_dim = g.features_[t].cols();

    // Labels: vocabulary is either supplied or the sorted set of observed names.
    std::vector<std::string> classes;
    const std::vector<std::string>* fixed = nullptr;
    if (opts.vocab != nullptr) {
      auto it = opts.vocab->find(tname);
      if (it != opts.vocab->end()) fixed = &it->second;
    }
    if (fixed != nullptr) {
      classes = *fixed;
    } else {
      std::set<std::string> seen;
      for (const NodeSpec* n : members) {
        if (n->label) seen.insert(*n->label);
      }
      classes.assign(seen.begin(), seen.end());
    }
    std::vector<int> labels(members.size(), -1);
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (!members[i]->label) continue;
      auto it = std::find(classes.begin(), classes.end(), *members[i]->label);
      if (it == classes.end()) {
        throw DataError("unknown label class '" + *members[i]->label + "' for node '" + members[i]->name + "'");
      }
      labels[i] = static_cast<int>(it - classes.begin());
    }
    g.labels_[t] = std::move(labels);
    g.class_names_[t] = std::move(classes);
  }

  // Edges with reverse materialization and triplet deduplication.
  std::set<EdgeTriplet> present;
  std::size_t duplicates = 0;
  auto push_edge = [&](EdgeTriplet e) {
    if (present.insert(e).second) g.edges_.push_back(e);
  };
  std::set<EdgeTriplet> input_seen;
  for (const auto& es : edge_list) {
    auto src = g.find_node(es.src);
    auto dst = g.find_node(es.dst);
    if (!src) throw DataError("edge references unknown node '" + es.src + "'");
    if (!dst) throw DataError("edge references unknown node '" + es.dst + "'");
    auto rit = rel_ids.find(es.relation);
    if (rit == rel_ids.end()) throw DataError("edge references unknown relation '" + es.relation + "'");
    const RelationType& rel = g.relations_[static_cast<std::size_t>(rit->second)];
    if (g.node_type_of_[*src] != rel.src_type || g.node_type_of_[*dst] != rel.dst_type) {
      throw DataError("edge " + es.src + " -> " + es.dst + " contradicts relation '" + rel.name + "' (" +
                      g.node_types_[static_cast<std::size_t>(rel.src_type)].name + " -> " +
                      g.node_types_[static_cast<std::size_t>(rel.dst_type)].name + ")");
    }
    const EdgeTriplet e{*src, *dst, rel.id};
    if (!input_seen.insert(e).second) {
      ++duplicates;
      continue;
    }
    push_edge(e);
    push_edge({*dst, *src, rel.reverse_id});
  }
  if (duplicates > 0 && opts.warn_duplicates) {
    std::cerr << "warning: dropped " << duplicates << " duplicate edge triplet(s)\n";
  }

  g.index_edges();
  return g;
}

/// Adds one self-loop relation per node type (named "self:<type>") and one
/// self-loop edge per node. Throws if the graph already has self-loops.
inline HetGraph add_self_loops(const HetGraph& g) {
  if (g.has_self_loops()) throw std::logic_error("add_self_loops: graph already has self-loop relations");
  HetGraph out = g;
  std::vector<RelationId> loop_rel(g.num_types());
  for (const auto& t : g.node_types_) {
    const auto id = static_cast<RelationId>(out.relations_.size());
    out.relations_.push_back({id, "self:" + t.name, t.id, t.id, id, true});
    loop_rel[static_cast<std::size_t>(t.id)] = id;
  }
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    out.edges_.push_back({v, v, loop_rel[static_cast<std::size_t>(g.type_of(v))]});
  }
  out.index_edges();
  return out;
}

/// Reorders nodes within each type: new local index k holds old local index
/// perm[t][k]. Edge order is preserved.
inline HetGraph permute_within_types(const HetGraph& g, const std::vector<std::vector<std::size_t>>& perm) {
  if (perm.size() != g.num_types()) throw std::invalid_argument("permutation per type required");
  HetGraph out = g;
  std::vector<NodeId> new_id(g.num_nodes());
  for (std::size_t t = 0; t < g.num_types(); ++t) {
    const auto tt = static_cast<TypeId>(t);
    const std::size_t n = g.type_count(tt);
    if (perm[t].size() != n) throw std::invalid_argument("permutation size mismatch");
    Tensor f(n, g.features(tt).cols());
    std::vector<int> labels(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t old = perm[t][k];
      new_id[g.global_id(tt, old)] = g.global_id(tt, k);
      std::copy(g.features(tt).row(old).begin(), g.features(tt).row(old).end(), f.row(k).begin());
      labels[k] = g.labels(tt)[old];
      out.node_names_[g.global_id(tt, k)] = g.node_names_[g.global_id(tt, old)];
    }
    out.features_[t] = std::move(f);
    out.labels_[t] = std::move(labels);
  }
  out.node_index_.clear();
  for (NodeId v = 0; v < out.num_nodes(); ++v) out.node_index_.emplace(out.node_names_[v], v);
  for (auto& e : out.edges_) {
    e.src = new_id[e.src];
    e.dst = new_id[e.dst];
  }
  out.index_edges();
  return out;
}

}  // namespace hetsann
