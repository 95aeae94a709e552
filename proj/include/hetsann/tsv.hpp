// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Tab-separated graph files.
//
//   nodes.tsv      node_name <TAB> type_name <TAB> label_or_- [<TAB> f1,f2,...]
//   edges.tsv      src_name <TAB> dst_name <TAB> relation_name
//   relations.tsv  relation_name <TAB> src_type <TAB> dst_type <TAB> reverse_name
//
// Lines starting with '#' and blank lines are ignored. Edges are stored in
// one direction; reverses are synthesized on load.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hetsann/error.hpp"
#include "hetsann/graph.hpp"

namespace hetsann {

namespace tsv_detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Calls fn(line_number, fields) for each non-comment line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    fn(lineno, split(line, '\t'));
  }
}

}  // namespace tsv_detail

struct GraphFiles {
  std::filesystem::path nodes;
  std::filesystem::path edges;
  std::filesystem::path relations;

  static GraphFiles in_directory(const std::filesystem::path& dir) {
    return {dir / "nodes.tsv", dir / "edges.tsv", dir / "relations.tsv"};
  }
};

/// Parses the three files and builds the graph (without self-loops).
/// Errors carry the offending file and line.
inline HetGraph load_tsv(const GraphFiles& files, const BuildOptions& opts = {}) {
  using tsv_detail::for_each_record;

  std::vector<RelationSpec> relations;
  std::map<std::string, std::pair<std::string, std::string>> rel_types;  // incl. implied reverses
  const std::string rel_file = files.relations.string();
  for_each_record(files.relations, [&](std::size_t ln, const std::vector<std::string_view>& f) {
    if (f.size() != 4) throw DataError(rel_file, ln, "expected 4 fields, found " + std::to_string(f.size()));
    RelationSpec r{std::string(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3])};
    for (const auto& s : {r.name, r.src_type, r.dst_type, r.reverse}) {
      if (s.empty()) throw DataError(rel_file, ln, "empty field");
    }
    rel_types[r.name] = {r.src_type, r.dst_type};
    rel_types.try_emplace(r.reverse, r.dst_type, r.src_type);
    relations.push_back(std::move(r));
  });

  std::vector<NodeSpec> nodes;
  std::map<std::string, std::string> node_type;
  std::map<std::string, std::pair<std::size_t, std::size_t>> type_dim;  // type -> (dim, first line)
  const std::string node_file = files.nodes.string();
  for_each_record(files.nodes, [&](std::size_t ln, const std::vector<std::string_view>& f) {
    if (f.size() != 3 && f.size() != 4) {
      throw DataError(node_file, ln, "expected 3 or 4 fields, found " + std::to_string(f.size()));
    }
    NodeSpec n;
    n.name = std::string(f[0]);
    n.type = std::string(f[1]);
    if (n.name.empty() || n.type.empty()) throw DataError(node_file, ln, "empty node name or type");
    if (f[2] != "-") {
      if (f[2].empty()) throw DataError(node_file, ln, "empty label (use '-' for none)");
      n.label = std::string(f[2]);
    }
    if (f.size() == 4 && !f[3].empty()) {
      for (auto tok : tsv_detail::split(f[3], ',')) {
        double v = 0.0;
        if (!tsv_detail::parse_double(tok, v)) {
          throw DataError(node_file, ln, "malformed feature value '" + std::string(tok) + "'");
        }
        n.features.push_back(v);
      }
    }
    auto [it, first] = type_dim.try_emplace(n.type, n.features.size(), ln);
    if (!first && it->second.first != n.features.size()) {
      throw DataError(node_file, ln,
                      "feature dimension " + std::to_string(n.features.size()) + " differs from " +
                          std::to_string(it->second.first) + " declared for type '" + n.type + "' on line " +
                          std::to_string(it->second.second));
    }
    if (!node_type.emplace(n.name, n.type).second) throw DataError(node_file, ln, "duplicate node '" + n.name + "'");
    nodes.push_back(std::move(n));
  });

  std::vector<EdgeSpec> edges;
  const std::string edge_file = files.edges.string();
  for_each_record(files.edges, [&](std::size_t ln, const std::vector<std::string_view>& f) {
    if (f.size() != 3) throw DataError(edge_file, ln, "expected 3 fields, found " + std::to_string(f.size()));
    EdgeSpec e{std::string(f[0]), std::string(f[1]), std::string(f[2])};
    auto s = node_type.find(e.src);
    auto d = node_type.find(e.dst);
    if (s == node_type.end()) throw DataError(edge_file, ln, "unknown node '" + e.src + "'");
    if (d == node_type.end()) throw DataError(edge_file, ln, "unknown node '" + e.dst + "'");
    auto r = rel_types.find(e.relation);
    if (r == rel_types.end()) throw DataError(edge_file, ln, "unknown relation '" + e.relation + "'");
    if (r->second.first != s->second || r->second.second != d->second) {
      throw DataError(edge_file, ln,
                      "endpoint types " + s->second + " -> " + d->second + " contradict relation '" + e.relation +
                          "' (" + r->second.first + " -> " + r->second.second + ")");
    }
    edges.push_back(std::move(e));
  });

  return build_graph(nodes, edges, relations, opts);
}

/// Writes the graph in the three-file format. Self-loops are omitted and only
/// the canonical direction of each paired relation is written, so loading the
/// output reproduces the graph.
inline void save_tsv(const HetGraph& g, const GraphFiles& files) {
  auto open = [](const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    return out;
  };

  {
    auto out = open(files.relations);
    out << "# relation\tsrc_type\tdst_type\treverse\n";
    for (const auto& r : g.relations()) {
      if (r.is_self_loop || !r.is_canonical()) continue;
      out << r.name << '\t' << g.node_type(r.src_type).name << '\t' << g.node_type(r.dst_type).name << '\t'
          << g.relation(r.reverse_id).name << '\n';
    }
  }
  {
    auto out = open(files.nodes);
    out << "# node\ttype\tlabel\tfeatures\n";
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      const TypeId t = g.type_of(v);
      const int label = g.labels(t)[g.local_index(v)];
      out << g.node_name(v) << '\t' << g.node_type(t).name << '\t'
          << (label < 0 ? std::string("-") : g.class_names(t)[static_cast<std::size_t>(label)]);
      if (g.has_attributes(t)) {
        out << '\t';
        const auto row = g.features(t).row(g.local_index(v));
        for (std::size_t k = 0; k < row.size(); ++k) {
          if (k > 0) out << ',';
          out << tsv_detail::format_double(row[k]);
        }
      }
      out << '\n';
    }
  }
  {
    auto out = open(files.edges);
    out << "# src\tdst\trelation\n";
    for (const auto& e : g.edges()) {
      const auto& r = g.relation(e.rel);
      if (r.is_self_loop || !r.is_canonical()) continue;
      out << g.node_name(e.src) << '\t' << g.node_name(e.dst) << '\t' << r.name << '\n';
    }
  }
}

}  // namespace hetsann
