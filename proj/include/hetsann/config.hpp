// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Flat key=value run configuration.
//
//   # comment
//   variant = mr
//   lr = 0.005
//
// Keys are listed by RunConfig::keys(); every key is also a CLI flag
// (--max-epochs for max_epochs). Later assignments win.

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hetsann/error.hpp"
#include "hetsann/model.hpp"
#include "hetsann/split.hpp"
#include "hetsann/synth.hpp"
#include "hetsann/trainer.hpp"
#include "hetsann/tsv.hpp"

namespace hetsann {

struct RunConfig {
  // Data source: a directory with nodes.tsv/edges.tsv/relations.tsv, or the
  // synthetic generator.
  std::string data_dir;
  bool synth = false;
  SynthSpec synth_spec;

  std::string main_task;               // node type name; empty picks a default
  std::vector<std::string> aux_tasks;  // empty with M means every other labeled type
  std::string variant = "base";

  ModelConfig model;
  TrainConfig train;
  SplitRatios split;
  std::size_t repeats = 1;
  std::string out_dir = "out";

  struct Key {
    std::string name;
    std::string help;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
  };

  static const std::vector<Key>& keys();

  /// Applies one assignment; unknown keys and bad values name the key.
  void set(const std::string& key, const std::string& value);

  /// Every key with its current value, one "key = value" line each.
  void write(std::ostream& os) const {
    for (const Key& k : keys()) os << k.name << " = " << k.get(*this) << '\n';
  }

  /// Consistency checks across fields.
  void validate() const {
    if (synth == !data_dir.empty()) throw ConfigError("config: set exactly one of synth or data_dir");
    if (repeats == 0) throw ConfigError("config: repeats must be >= 1");
    Variant::parse(variant);
    model.validate();
    train.validate();
    if (synth) synth_spec.validate();
  }

  /// Model settings with the variant's switches applied.
  ModelConfig resolved_model() const {
    ModelConfig m = model;
    Variant::parse(variant).apply(m);
    return m;
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!tsv_detail::parse_double(v, out)) throw ConfigError("config: " + key + ": expected a number, got '" + v + "'");
  return out;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("config: " + key + ": expected a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::out_of_range&) {
    throw ConfigError("config: " + key + ": value out of range");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + key + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto part : tsv_detail::split(v, ',')) {
    std::string s = trim(part);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + xs[i];
  return s;
}

inline std::string fmt(double v) { return tsv_detail::format_double(v); }

}  // namespace config_detail

inline const std::vector<RunConfig::Key>& RunConfig::keys() {
  using namespace config_detail;
  using C = RunConfig;
#define HETSANN_DOUBLE(key, help, expr)                                                  \
  Key {                                                                                  \
    key, help, [](const C& c) { return fmt(c.expr); },                                   \
        [](C& c, const std::string& v) { c.expr = to_double(key, v); }                   \
  }
#define HETSANN_SIZE(key, help, expr)                                                    \
  Key {                                                                                  \
    key, help, [](const C& c) { return std::to_string(c.expr); },                        \
        [](C& c, const std::string& v) { c.expr = static_cast<std::size_t>(to_uint(key, v)); } \
  }
  static const std::vector<Key> table = {
      Key{"data_dir", "directory holding nodes.tsv, edges.tsv and relations.tsv",
          [](const C& c) { return c.data_dir; }, [](C& c, const std::string& v) { c.data_dir = v; }},
      Key{"synth", "use the synthetic generator instead of data_dir",
          [](const C& c) { return std::string(c.synth ? "true" : "false"); },
          [](C& c, const std::string& v) { c.synth = to_bool("synth", v); }},
      Key{"synth_seed", "generator seed", [](const C& c) { return std::to_string(c.synth_spec.seed); },
          [](C& c, const std::string& v) { c.synth_spec.seed = to_uint("synth_seed", v); }},
      HETSANN_SIZE("synth_authors", "number of author nodes", synth_spec.authors),
      HETSANN_SIZE("synth_papers", "number of paper nodes", synth_spec.papers),
      HETSANN_SIZE("synth_classes", "classes per node type", synth_spec.classes),
      HETSANN_DOUBLE("synth_p_in", "same-class edge probability", synth_spec.p_in),
      HETSANN_DOUBLE("synth_p_out", "cross-class edge probability", synth_spec.p_out),
      HETSANN_SIZE("synth_feature_dim", "feature dimension", synth_spec.feature_dim),
      HETSANN_DOUBLE("synth_mu", "class-mean separation", synth_spec.mu),
      HETSANN_DOUBLE("synth_noise", "feature noise std", synth_spec.noise),
      Key{"main_task", "node type of the main classification task",
          [](const C& c) { return c.main_task; }, [](C& c, const std::string& v) { c.main_task = v; }},
      Key{"aux_tasks", "comma-separated auxiliary task types (multi-task only)",
          [](const C& c) { return join(c.aux_tasks); },
          [](C& c, const std::string& v) { c.aux_tasks = to_list(v); }},
      Key{"variant", "base, or letters m (multi-task), r (voices), v (cycle)",
          [](const C& c) { return c.variant; },
          [](C& c, const std::string& v) {
            Variant::parse(v);
            c.variant = v;
          }},
      HETSANN_SIZE("layers", "number of attention layers", model.layers),
      HETSANN_SIZE("heads", "attention heads per layer", model.heads),
      HETSANN_SIZE("head_dim", "output dimension per head", model.head_dim),
      HETSANN_DOUBLE("beta1", "weight of the cycle match term", model.beta1),
      HETSANN_DOUBLE("beta2", "weight of the pseudo-inverse term", model.beta2),
      HETSANN_DOUBLE("leaky_slope", "LeakyReLU negative slope", model.leaky_slope),
      HETSANN_DOUBLE("dropout", "dropout rate on layer inputs", model.dropout),
      HETSANN_DOUBLE("reg_weight", "L2 weight", model.reg_weight),
      Key{"residual", "add the layer input where dimensions agree",
          [](const C& c) { return std::string(c.model.residual ? "true" : "false"); },
          [](C& c, const std::string& v) { c.model.residual = to_bool("residual", v); }},
      Key{"cold_start", "dummy features for types without attributes: onehot or zeros",
          [](const C& c) { return std::string(c.model.cold_start == ColdStart::kOneHot ? "onehot" : "zeros"); },
          [](C& c, const std::string& v) {
            if (v == "onehot") c.model.cold_start = ColdStart::kOneHot;
            else if (v == "zeros") c.model.cold_start = ColdStart::kZeros;
            else throw ConfigError("config: cold_start: expected onehot or zeros, got '" + v + "'");
          }},
      Key{"cycle_layers", "comma-separated 1-based layers with cycle loss; empty means all",
          [](const C& c) {
            std::vector<std::string> xs;
            for (auto l : c.model.cycle_layers) xs.push_back(std::to_string(l));
            return join(xs);
          },
          [](C& c, const std::string& v) {
            c.model.cycle_layers.clear();
            for (const auto& s : to_list(v)) c.model.cycle_layers.push_back(to_uint("cycle_layers", s));
          }},
      HETSANN_DOUBLE("lr", "Adam learning rate", train.lr),
      HETSANN_SIZE("max_epochs", "epoch cap", train.max_epochs),
      HETSANN_SIZE("patience", "epochs without validation improvement before stopping", train.patience),
      Key{"seed", "base seed; repeat k uses seed + k", [](const C& c) { return std::to_string(c.train.seed); },
          [](C& c, const std::string& v) { c.train.seed = to_uint("seed", v); }},
      HETSANN_DOUBLE("train_ratio", "training share of labeled nodes", split.train),
      HETSANN_DOUBLE("val_ratio", "validation share", split.val),
      HETSANN_DOUBLE("test_ratio", "test share", split.test),
      HETSANN_SIZE("repeats", "independent runs with consecutive seeds", repeats),
      Key{"out_dir", "output directory", [](const C& c) { return c.out_dir; },
          [](C& c, const std::string& v) { c.out_dir = v; }},
  };
#undef HETSANN_DOUBLE
#undef HETSANN_SIZE
  return table;
}

inline void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Key& k : keys()) {
    if (k.name == key) {
      k.set(*this, config_detail::trim(value));
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

/// Applies every assignment of a config stream; errors carry the line.
inline void apply_config(RunConfig& cfg, std::istream& in, const std::string& source = "config") {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = config_detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      cfg.set(config_detail::trim(s.substr(0, eq)), s.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  RunConfig cfg;
  apply_config(cfg, in, path);
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  RunConfig cfg;
  apply_config(cfg, in);
  return cfg;
}

}  // namespace hetsann
