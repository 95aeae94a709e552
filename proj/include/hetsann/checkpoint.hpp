// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Text checkpoint, version 1:
//
//   hetsann-checkpoint 1
//   config <key> = <value>            one line per RunConfig key
//   seed <run seed>
//   vocab <type> <class> <class> ...  one line per labeled type
//   param <name> <rows> <cols>
//   <cols values>                     rows lines, shortest round-trip form
//   ...
//   end
//
// Values round-trip exactly.

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hetsann/config.hpp"
#include "hetsann/error.hpp"
#include "hetsann/graph.hpp"
#include "hetsann/params.hpp"
#include "hetsann/tsv.hpp"

namespace hetsann {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  std::uint64_t seed = 0;
  LabelVocab vocab;
  std::vector<Parameter> params;
};

inline void write_checkpoint(std::ostream& os, const RunConfig& cfg, std::uint64_t seed, const HetGraph& g,
                             const ParamStore& store) {
  os << "hetsann-checkpoint " << kCheckpointVersion << '\n';
  for (const auto& k : RunConfig::keys()) os << "config " << k.name << " = " << k.get(cfg) << '\n';
  os << "seed " << seed << '\n';
  for (std::size_t t = 0; t < g.num_types(); ++t) {
    const auto type = static_cast<TypeId>(t);
    if (!g.has_labels(type)) continue;
    os << "vocab " << g.node_type(type).name;
    for (const auto& c : g.class_names(type)) os << ' ' << c;
    os << '\n';
  }
  for (const auto& p : store) {
    os << "param " << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
    for (std::size_t r = 0; r < p.value.rows(); ++r) {
      for (std::size_t c = 0; c < p.value.cols(); ++c) {
        os << (c ? " " : "") << tsv_detail::format_double(p.value(r, c));
      }
      os << '\n';
    }
  }
  os << "end\n";
}

inline Checkpoint read_checkpoint(std::istream& in, const std::string& source = "checkpoint") {
  auto fail = [&](std::size_t line, const std::string& what) -> DataError { return DataError(source, line, what); };
  Checkpoint ck;
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next() || line != "hetsann-checkpoint " + std::to_string(kCheckpointVersion)) {
    throw fail(lineno, "not a version " + std::to_string(kCheckpointVersion) + " checkpoint");
  }
  bool ended = false;
  while (next()) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "config") {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw fail(lineno, "malformed config line");
      const std::string key = config_detail::trim(std::string_view(line).substr(7, eq - 7));
      try {
        ck.config.set(key, line.substr(eq + 1));
      } catch (const ConfigError& e) {
        throw fail(lineno, e.what());
      }
    } else if (tag == "seed") {
      if (!(ls >> ck.seed)) throw fail(lineno, "malformed seed line");
    } else if (tag == "vocab") {
      std::string type, cls;
      if (!(ls >> type)) throw fail(lineno, "malformed vocab line");
      auto& names = ck.vocab[type];
      while (ls >> cls) names.push_back(cls);
    } else if (tag == "param") {
      Parameter p;
      std::size_t rows = 0, cols = 0;
      if (!(ls >> p.name >> rows >> cols)) throw fail(lineno, "malformed param header");
      p.value = Tensor(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!next()) throw fail(lineno, "truncated values of " + p.name);
        const auto fields = tsv_detail::split(line, ' ');
        if (fields.size() != cols) throw fail(lineno, "expected " + std::to_string(cols) + " values for " + p.name);
        for (std::size_t c = 0; c < cols; ++c) {
          if (!tsv_detail::parse_double(fields[c], p.value(r, c))) throw fail(lineno, "bad number in " + p.name);
        }
      }
      ck.params.push_back(std::move(p));
    } else if (tag == "end") {
      ended = true;
      break;
    } else {
      throw fail(lineno, "unknown record '" + tag + "'");
    }
  }
  if (!ended) throw fail(lineno, "missing end marker");
  return ck;
}

inline void save_checkpoint(const std::string& path, const RunConfig& cfg, std::uint64_t seed, const HetGraph& g,
                            const ParamStore& store) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, cfg, seed, g, store);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in, path);
}

/// Copies checkpoint tensors into a freshly built store of the same
/// architecture; names and shapes must match one to one.
inline void restore_params(ParamStore& store, const std::vector<Parameter>& saved) {
  if (saved.size() != store.size()) {
    throw DataError("checkpoint has " + std::to_string(saved.size()) + " tensors, model expects " +
                    std::to_string(store.size()));
  }
  for (std::size_t i = 0; i < saved.size(); ++i) {
    Parameter& p = store[i];
    if (p.name != saved[i].name || !p.value.same_shape(saved[i].value)) {
      throw DataError("checkpoint tensor '" + saved[i].name + "' does not match model tensor '" + p.name + "' " +
                      p.value.shape_string());
    }
    p.value = saved[i].value;
  }
}

}  // namespace hetsann
