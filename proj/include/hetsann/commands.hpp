// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Subcommand implementations behind the CLI. Each writes its CSV artifacts
// into the configured output directory and returns a value the caller can
// inspect; exit-code mapping happens in the tool.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hetsann/checkpoint.hpp"
#include "hetsann/config.hpp"
#include "hetsann/error.hpp"
#include "hetsann/gradcheck.hpp"
#include "hetsann/graph.hpp"
#include "hetsann/metrics.hpp"
#include "hetsann/model.hpp"
#include "hetsann/split.hpp"
#include "hetsann/synth.hpp"
#include "hetsann/trainer.hpp"
#include "hetsann/tsv.hpp"

namespace hetsann {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitVerification = 3 };

/// Graph of the configured source, without self-loops.
inline HetGraph load_graph(const RunConfig& cfg, const LabelVocab* vocab = nullptr) {
  if (cfg.synth) {
    const SynthRecords r = generate_records(cfg.synth_spec);
    BuildOptions opts;
    opts.cold_start = cfg.model.cold_start;
    opts.vocab = vocab;
    return build_graph(r.nodes, r.edges, r.relations, opts);
  }
  BuildOptions opts;
  opts.cold_start = cfg.model.cold_start;
  opts.vocab = vocab;
  return load_tsv(GraphFiles::in_directory(cfg.data_dir), opts);
}

/// Main task first, then auxiliary tasks when multi-task is on.
inline std::vector<TypeId> resolve_tasks(const HetGraph& g, const RunConfig& cfg) {
  std::vector<TypeId> labeled;
  for (std::size_t t = 0; t < g.num_types(); ++t) {
    if (g.has_labels(static_cast<TypeId>(t))) labeled.push_back(static_cast<TypeId>(t));
  }
  if (labeled.empty()) throw ConfigError("no node type carries labels");

  auto type_of = [&](const std::string& name, const char* key) {
    const auto t = g.find_type(name);
    if (!t) throw ConfigError(std::string("config: ") + key + ": unknown node type '" + name + "'");
    if (!g.has_labels(*t)) throw ConfigError(std::string("config: ") + key + ": node type '" + name + "' has no labels");
    return *t;
  };

  std::vector<TypeId> tasks{cfg.main_task.empty() ? labeled.front() : type_of(cfg.main_task, "main_task")};
  const bool multi = Variant::parse(cfg.variant).multi_task;
  if (!multi) {
    if (!cfg.aux_tasks.empty()) throw ConfigError("config: aux_tasks needs a multi-task variant (letter m)");
    return tasks;
  }
  if (labeled.size() < 2) throw ConfigError("multi-task requires ≥2 labeled types");
  if (cfg.aux_tasks.empty()) {
    for (TypeId t : labeled) {
      if (t != tasks.front()) tasks.push_back(t);
    }
  } else {
    for (const auto& name : cfg.aux_tasks) {
      const TypeId t = type_of(name, "aux_tasks");
      if (std::find(tasks.begin(), tasks.end(), t) != tasks.end()) {
        throw ConfigError("config: aux_tasks: type '" + name + "' listed twice or equal to main_task");
      }
      tasks.push_back(t);
    }
  }
  return tasks;
}

/// One training run on a prepared graph.
struct RunResult {
  std::uint64_t seed = 0;
  HetSannModel model;
  std::vector<TypeSplit> splits;
  TrainHistory history;
  std::vector<TaskEvaluation> evaluation;
};

/// Splits, builds and trains with the run's seed; g must carry self-loops.
inline RunResult train_run(const HetGraph& g, const std::vector<TypeId>& tasks, const RunConfig& cfg,
                           std::uint64_t seed) {
  std::vector<TypeSplit> splits = split_dataset(g, tasks, cfg.split, seed);
  HetSannModel model(g, cfg.resolved_model(), tasks, seed);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  TrainHistory history = train(g, model, splits, tc);
  std::vector<TaskEvaluation> ev = evaluate(g, model, splits);
  return {seed, std::move(model), std::move(splits), std::move(history), std::move(ev)};
}

namespace commands_detail {

inline std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  const std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("config: out_dir: cannot create '" + cfg.out_dir + "': " + ec.message());
  return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  return out;
}

inline void write_aggregate_header(std::ostream& os) {
  os << "task,split,micro_f1_mean,micro_f1_std,macro_f1_mean,macro_f1_std,runs\n";
}

}  // namespace commands_detail

struct TrainSummary {
  std::vector<EvalReport> reports;                 // per task and seed, test split
  std::map<std::string, AggregateReport> by_task;  // test split
  std::vector<std::size_t> best_epochs;
};

/// Artifacts in out_dir: config.txt, history_seed<S>.csv, checkpoint_seed<S>.txt,
/// eval.csv (per task: one test row per seed, then a mean row) and aggregate.csv.
inline TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log) {
  using namespace commands_detail;
  cfg.validate();
  const HetGraph g = add_self_loops(load_graph(cfg));
  const std::vector<TypeId> tasks = resolve_tasks(g, cfg);
  const auto dir = prepare_out_dir(cfg);
  {
    auto echo = open_out(dir / "config.txt");
    cfg.write(echo);
  }

  TrainSummary summary;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed = cfg.train.seed + r;
    RunResult run = train_run(g, tasks, cfg, seed);
    {
      auto h = open_out(dir / ("history_seed" + std::to_string(seed) + ".csv"));
      run.history.write_csv(h);
    }
    save_checkpoint((dir / ("checkpoint_seed" + std::to_string(seed) + ".txt")).string(), cfg, seed, g,
                    run.model.params());
    summary.best_epochs.push_back(run.history.best_epoch);
    for (const TaskEvaluation& e : run.evaluation) {
      summary.reports.push_back({g.node_type(e.type).name, "test", e.test_micro, e.test_macro, seed});
    }
    const TaskEvaluation& main = run.evaluation.front();
    log << "seed " << seed << ": epochs " << run.history.epochs.size() << ", best " << run.history.best_epoch
        << ", " << g.node_type(main.type).name << " test micro_f1 " << main.test_micro << " macro_f1 "
        << main.test_macro << '\n';
  }

  auto eval = open_out(dir / "eval.csv");
  auto agg = open_out(dir / "aggregate.csv");
  write_eval_header(eval);
  write_aggregate_header(agg);
  for (TypeId t : tasks) {
    const std::string name = g.node_type(t).name;
    std::vector<EvalReport> mine;
    for (const auto& rep : summary.reports) {
      if (rep.task == name) {
        mine.push_back(rep);
        write_eval_row(eval, rep);
      }
    }
    const AggregateReport a = aggregate_runs(mine);
    summary.by_task[name] = a;
    eval << name << ",test," << a.micro.mean << ',' << a.macro.mean << ",mean\n";
    agg << name << ",test," << a.micro.mean << ',' << a.micro.std << ',' << a.macro.mean << ',' << a.macro.std
        << ',' << a.micro.n << '\n';
    log << name << " test micro_f1 " << a.micro.mean << " +- " << a.micro.std << ", macro_f1 " << a.macro.mean
        << " +- " << a.macro.std << " over " << a.micro.n << " run(s)\n";
  }
  return summary;
}

/// Re-scores a checkpoint on its own split; writes one row per task and split.
inline std::vector<EvalReport> cmd_eval(const std::string& checkpoint_path, std::ostream& csv) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  ck.config.validate();
  const HetGraph g = add_self_loops(load_graph(ck.config, &ck.vocab));
  const std::vector<TypeId> tasks = resolve_tasks(g, ck.config);
  HetSannModel model(g, ck.config.resolved_model(), tasks, ck.seed);
  restore_params(model.params(), ck.params);
  const auto splits = split_dataset(g, tasks, ck.config.split, ck.seed);
  std::vector<EvalReport> out;
  for (const TaskEvaluation& e : evaluate(g, model, splits)) {
    const std::string name = g.node_type(e.type).name;
    out.push_back({name, "train", e.train_micro, e.train_macro, ck.seed});
    out.push_back({name, "val", e.val_micro, e.val_macro, ck.seed});
    out.push_back({name, "test", e.test_micro, e.test_macro, ck.seed});
  }
  write_eval_header(csv);
  for (const auto& r : out) write_eval_row(csv, r);
  return out;
}

struct SweepRow {
  std::string param;
  std::string value;
  MeanStd micro;
};

/// Maps the sweep parameter names onto config keys.
inline std::string sweep_key(const std::string& param) {
  if (param == "L" || param == "layers") return "layers";
  if (param == "beta1") return "beta1";
  if (param == "beta2") return "beta2";
  throw ConfigError("sweep: parameter must be L, beta1 or beta2, got '" + param + "'");
}

/// One setting per value, repeats seeds each; main-task test Micro F1.
/// Writes sweep.csv with param,value,micro_f1_mean,micro_f1_std.
inline std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, const std::string& param,
                                       std::vector<std::string> values, std::ostream& log) {
  using namespace commands_detail;
  const std::string key = sweep_key(param);
  std::erase_if(values, [](const std::string& v) { return config_detail::trim(v).empty(); });
  if (values.empty()) throw ConfigError("sweep: empty value list");
  cfg.validate();
  std::vector<RunConfig> settings;
  for (const auto& v : values) {
    RunConfig c = cfg;
    c.set(key, v);
    c.validate();
    settings.push_back(std::move(c));
  }
  const HetGraph g = add_self_loops(load_graph(cfg));
  const std::vector<TypeId> tasks = resolve_tasks(g, cfg);
  const auto dir = prepare_out_dir(cfg);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    std::vector<double> f1;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      f1.push_back(train_run(g, tasks, settings[i], cfg.train.seed + r).evaluation.front().test_micro);
    }
    rows.push_back({param, values[i], mean_std(f1)});
    log << param << '=' << values[i] << ": test micro_f1 " << rows.back().micro.mean << " +- "
        << rows.back().micro.std << '\n';
  }
  auto out = open_out(dir / "sweep.csv");
  out << "param,value,micro_f1_mean,micro_f1_std\n";
  for (const auto& r : rows) out << r.param << ',' << r.value << ',' << r.micro.mean << ',' << r.micro.std << '\n';
  return rows;
}

/// Writes nodes.tsv, edges.tsv and relations.tsv of the synthetic graph.
inline HetGraph cmd_synth(const SynthSpec& spec, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("synth: cannot create '" + out_dir + "': " + ec.message());
  HetGraph g = generate(spec);
  save_tsv(g, GraphFiles::in_directory(out_dir));
  return g;
}

/// Prints the report; the caller maps a failure to kExitVerification.
inline GradcheckReport cmd_gradcheck(const GradcheckOptions& opt, std::ostream& log) {
  const GradcheckReport r = run_gradcheck(opt);
  log << "gradcheck variant=" << opt.variant << " beta1=" << opt.beta1 << " beta2=" << opt.beta2 << ": "
      << r.scalars << " scalars, max rel error " << r.max_rel_error << " at " << r.worst_param
      << ", max abs error " << r.max_abs_error << ", " << r.seconds << " s: " << (r.passed ? "PASS" : "FAIL")
      << '\n';
  return r;
}

}  // namespace hetsann
