// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hetsann/hetsann.hpp"

namespace {

namespace fs = std::filesystem;
using namespace hetsann;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("hetsann_config_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

/// Small synthetic run that finishes in well under a second per seed.
RunConfig quick_config(const fs::path& out) {
  RunConfig cfg;
  cfg.synth = true;
  cfg.synth_spec.authors = 20;
  cfg.synth_spec.papers = 30;
  cfg.model.layers = 2;
  cfg.model.heads = 2;
  cfg.model.head_dim = 4;
  cfg.train.max_epochs = 5;
  cfg.train.patience = 5;
  cfg.out_dir = out.string();
  return cfg;
}

TEST(RunConfig, DefaultsEchoPublishedHyperparameters) {
  std::ostringstream os;
  RunConfig{}.write(os);
  std::map<std::string, double> echoed;
  std::istringstream in(os.str());
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find(" = ");
    double v = 0.0;
    if (tsv_detail::parse_double(line.substr(eq + 3), v)) echoed[line.substr(0, eq)] = v;
  }
  const std::map<std::string, double> want{{"layers", 3},       {"heads", 8},        {"head_dim", 8},
                                           {"dropout", 0.6},    {"reg_weight", 5e-4}, {"lr", 0.005},
                                           {"beta1", 1e-3},     {"beta2", 1e-5},     {"max_epochs", 1000},
                                           {"patience", 100},   {"train_ratio", 0.8}, {"val_ratio", 0.1},
                                           {"test_ratio", 0.1}, {"leaky_slope", 0.2}};
  for (const auto& [key, value] : want) EXPECT_EQ(echoed.at(key), value) << key;
}

TEST(RunConfig, ParseAppliesKeysAndIgnoresComments) {
  const RunConfig cfg = parse_config(
      "# comment\n"
      "synth = true\n"
      "  layers =  5  \n"
      "\n"
      "variant = mrv\n"
      "aux_tasks = paper, venue\n"
      "cycle_layers = 1,3\n"
      "cold_start = zeros\n");
  EXPECT_TRUE(cfg.synth);
  EXPECT_EQ(cfg.model.layers, 5u);
  EXPECT_EQ(cfg.variant, "mrv");
  EXPECT_EQ(cfg.aux_tasks, (std::vector<std::string>{"paper", "venue"}));
  EXPECT_EQ(cfg.model.cycle_layers, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(cfg.model.cold_start, ColdStart::kZeros);
  const ModelConfig m = cfg.resolved_model();
  EXPECT_TRUE(m.multi_task);
  EXPECT_TRUE(m.cycle);
  EXPECT_EQ(m.score_mode, ScoreMode::kVoices);
}

TEST(RunConfig, WriteThenParseRoundTrips) {
  RunConfig a;
  a.data_dir = "/tmp/data";
  a.variant = "rv";
  a.model.beta1 = 0.125;
  a.train.lr = 3e-4;
  a.model.cycle_layers = {2};
  a.repeats = 4;
  std::ostringstream os;
  a.write(os);
  const RunConfig b = parse_config(os.str());
  std::ostringstream again;
  b.write(again);
  EXPECT_EQ(os.str(), again.str());
}

TEST(RunConfig, ErrorsNameKeyAndLine) {
  try {
    parse_config("synth = true\nlr = abc\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("lr"), std::string::npos) << msg;
  }
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("layers\n"), ConfigError);
  EXPECT_THROW(parse_config("variant = q\n"), ConfigError);
  EXPECT_THROW(parse_config("layers = -2\n"), ConfigError);
}

TEST(RunConfig, ValidateRequiresExactlyOneSource) {
  RunConfig cfg;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.synth = true;
  cfg.validate();
  cfg.data_dir = "x";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Checkpoint, RoundTripRestoresParametersExactly) {
  RunConfig cfg = quick_config("unused");
  cfg.variant = "mrv";
  const HetGraph g = add_self_loops(load_graph(cfg));
  const HetSannModel m(g, cfg.resolved_model(), resolve_tasks(g, cfg), 7);
  std::stringstream ss;
  write_checkpoint(ss, cfg, 7, g, m.params());
  const Checkpoint ck = read_checkpoint(ss);
  EXPECT_EQ(ck.seed, 7u);
  EXPECT_EQ(ck.config.variant, "mrv");
  EXPECT_EQ(ck.vocab.at("author"), g.class_names(*g.find_type("author")));
  HetSannModel fresh(g, cfg.resolved_model(), resolve_tasks(g, cfg), 99);
  restore_params(fresh.params(), ck.params);
  for (std::size_t i = 0; i < m.params().size(); ++i) EXPECT_EQ(fresh.params()[i].value, m.params()[i].value);
}

TEST(Checkpoint, CorruptInputReportsLine) {
  std::istringstream in("hetsann-checkpoint 1\nseed 0\nparam w 1 2\n1.0 nope\nend\n");
  try {
    read_checkpoint(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  std::istringstream version("hetsann-checkpoint 99\nend\n");
  EXPECT_THROW(read_checkpoint(version), DataError);
}

TEST(Checkpoint, RestoreRejectsShapeMismatch) {
  ParamStore store;
  store.add("w", Tensor(2, 2));
  EXPECT_THROW(restore_params(store, {{"w", Tensor(2, 3), true}}), DataError);
  EXPECT_THROW(restore_params(store, {{"v", Tensor(2, 2), true}}), DataError);
}

TEST(Commands, TrainWritesOneRowPerSeedPlusMeanPerTask) {
  TempDir dir("train");
  RunConfig cfg = quick_config(dir.path);
  cfg.variant = "mrv";
  cfg.repeats = 3;
  std::ostringstream log;
  const TrainSummary s = cmd_train(cfg, log);
  EXPECT_EQ(s.reports.size(), 6u);
  EXPECT_EQ(s.best_epochs.size(), 3u);
  const auto eval = read_lines(dir.path / "eval.csv");
  ASSERT_EQ(eval.size(), 1u + 2u * 4u);
  EXPECT_EQ(eval[0], "task,split,micro_f1,macro_f1,seed");
  EXPECT_TRUE(eval[4].starts_with("author,test,") && eval[4].ends_with(",mean")) << eval[4];
  const auto agg = read_lines(dir.path / "aggregate.csv");
  ASSERT_EQ(agg.size(), 3u);
  EXPECT_TRUE(agg[1].ends_with(",3")) << agg[1];
  for (int seed = 0; seed < 3; ++seed) {
    EXPECT_TRUE(fs::exists(dir.path / ("history_seed" + std::to_string(seed) + ".csv")));
    EXPECT_TRUE(fs::exists(dir.path / ("checkpoint_seed" + std::to_string(seed) + ".txt")));
  }
  std::ostringstream echo;
  cfg.write(echo);
  std::ifstream saved(dir.path / "config.txt");
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(saved), {}), echo.str());
}

TEST(Commands, EvalReproducesTrainedTestScore) {
  TempDir dir("eval");
  RunConfig cfg = quick_config(dir.path);
  std::ostringstream log;
  const TrainSummary s = cmd_train(cfg, log);
  std::ostringstream csv;
  const auto rows = cmd_eval((dir.path / "checkpoint_seed0.txt").string(), csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].split, "test");
  EXPECT_EQ(rows[2].micro_f1, s.reports[0].micro_f1);
}

TEST(Commands, MultiTaskNeedsTwoLabeledTypes) {
  TempDir dir("single");
  const fs::path data = dir.path / "data";
  fs::create_directories(data);
  std::ofstream(data / "relations.tsv") << "writes\tauthor\tpaper\twritten\n";
  std::ofstream(data / "nodes.tsv") << "a0\tauthor\tx\t1\na1\tauthor\ty\t0\np0\tpaper\t-\n";
  std::ofstream(data / "edges.tsv") << "a0\tp0\twrites\na1\tp0\twrites\n";
  RunConfig cfg;
  cfg.data_dir = data.string();
  cfg.variant = "m";
  cfg.out_dir = (dir.path / "out").string();
  const HetGraph g = add_self_loops(load_graph(cfg));
  try {
    resolve_tasks(g, cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("multi-task requires"), std::string::npos);
  }
  cfg.variant = "base";
  EXPECT_EQ(resolve_tasks(g, cfg).size(), 1u);
  cfg.aux_tasks = {"paper"};
  EXPECT_THROW(resolve_tasks(g, cfg), ConfigError);
}

TEST(Commands, TaskSelection) {
  RunConfig cfg = quick_config("unused");
  const HetGraph g = add_self_loops(load_graph(cfg));
  cfg.main_task = "paper";
  cfg.variant = "m";
  const auto tasks = resolve_tasks(g, cfg);
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[0], *g.find_type("paper"));
  cfg.main_task = "venue";
  EXPECT_THROW(resolve_tasks(g, cfg), ConfigError);
}

TEST(Commands, SweepWritesOneRowPerValue) {
  TempDir dir("sweep");
  RunConfig cfg = quick_config(dir.path);
  std::ostringstream log;
  const auto rows = cmd_sweep(cfg, "L", {"1", "2", " "}, log);
  ASSERT_EQ(rows.size(), 2u);
  const auto lines = read_lines(dir.path / "sweep.csv");
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "param,value,micro_f1_mean,micro_f1_std");
  EXPECT_TRUE(lines[1].starts_with("L,1,"));
  EXPECT_THROW(cmd_sweep(cfg, "L", {}, log), ConfigError);
  EXPECT_THROW(cmd_sweep(cfg, "dropout", {"0.5"}, log), ConfigError);
}

TEST(Commands, SynthWritesLoadableFiles) {
  TempDir dir("synth");
  SynthSpec spec;
  spec.authors = 10;
  spec.papers = 12;
  const HetGraph g = cmd_synth(spec, dir.path.string());
  const HetGraph h = load_tsv(GraphFiles::in_directory(dir.path));
  EXPECT_EQ(h.num_nodes(), g.num_nodes());
  EXPECT_EQ(h.num_edges(), g.num_edges());
}

}  // namespace
