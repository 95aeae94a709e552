// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

// hetsann: train, eval, gradcheck, sweep and synth subcommands.
// Exit codes: 0 ok, 1 config error, 2 data error, 3 verification failure.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetsann/hetsann.hpp"

namespace {

using hetsann::RunConfig;

/// Exposes every RunConfig key as --key-name on a subcommand.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool synth = false;

  void attach(CLI::App& app) {
    app.add_option("-c,--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    for (const auto& key : RunConfig::keys()) {
      std::string flag = key.name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (key.name == "synth") {
        app.add_flag("--synth", synth, key.help);
      } else {
        app.add_option("--" + flag, values[key.name], key.help);
      }
    }
  }

  /// File values first, then flags given on the command line.
  RunConfig resolve(const CLI::App& app) const {
    RunConfig cfg = config_file.empty() ? RunConfig{} : hetsann::load_config(config_file);
    if (synth) cfg.set("synth", "true");
    for (const auto& key : RunConfig::keys()) {
      if (key.name == "synth") continue;
      std::string flag = key.name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (app.count("--" + flag) > 0) cfg.set(key.name, values.at(key.name));
    }
    return cfg;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Heterogeneous graph attention networks for node classification"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train, evaluate on test and aggregate over repeats");
  ConfigFlags train_flags;
  train_flags.attach(*train);

  auto* eval = app.add_subcommand("eval", "re-score a checkpoint on its split");
  std::string checkpoint, eval_output;
  eval->add_option("checkpoint", checkpoint, "checkpoint file written by train")->required();
  eval->add_option("-o,--output", eval_output, "CSV path (default: stdout)");

  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  hetsann::GradcheckOptions gc;
  gradcheck->add_option("--variant", gc.variant, "variant letters")->capture_default_str();
  gradcheck->add_option("--beta1", gc.beta1, "cycle match weight")->capture_default_str();
  gradcheck->add_option("--beta2", gc.beta2, "pseudo-inverse weight")->capture_default_str();
  gradcheck->add_option("--layers", gc.layers, "layers")->capture_default_str();
  gradcheck->add_option("--heads", gc.heads, "heads")->capture_default_str();
  gradcheck->add_option("--head-dim", gc.head_dim, "head dimension")->capture_default_str();
  gradcheck->add_option("--eps", gc.eps, "finite-difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", gc.tolerance, "max relative error")->capture_default_str();
  gradcheck->add_option("--seed", gc.seed, "fixture and init seed")->capture_default_str();
  gradcheck->add_flag("--inject-error", gc.inject_error, "corrupt one analytic gradient entry");

  auto* sweep = app.add_subcommand("sweep", "test Micro F1 against one hyperparameter");
  ConfigFlags sweep_flags;
  sweep_flags.attach(*sweep);
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  sweep->add_option("--param", sweep_param, "L, beta1 or beta2")->required();
  sweep->add_option("--values", sweep_values, "values to try")->required()->delimiter(',');

  auto* synth = app.add_subcommand("synth", "write a synthetic graph as TSV files");
  hetsann::SynthSpec spec;
  std::string synth_out = "synth";
  synth->add_option("-o,--out-dir", synth_out, "output directory")->capture_default_str();
  synth->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  synth->add_option("--authors", spec.authors, "author nodes")->capture_default_str();
  synth->add_option("--papers", spec.papers, "paper nodes")->capture_default_str();
  synth->add_option("--classes", spec.classes, "classes per type")->capture_default_str();
  synth->add_option("--p-in", spec.p_in, "same-class edge probability")->capture_default_str();
  synth->add_option("--p-out", spec.p_out, "cross-class edge probability")->capture_default_str();
  synth->add_option("--feature-dim", spec.feature_dim, "feature dimension")->capture_default_str();
  synth->add_option("--mu", spec.mu, "class-mean separation")->capture_default_str();
  synth->add_option("--noise", spec.noise, "feature noise std")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? hetsann::kExitOk : hetsann::kExitConfig;
  }

  try {
    if (train->parsed()) {
      hetsann::cmd_train(train_flags.resolve(*train), std::cout);
    } else if (eval->parsed()) {
      if (eval_output.empty()) {
        hetsann::cmd_eval(checkpoint, std::cout);
      } else {
        std::ofstream out(eval_output);
        if (!out) throw hetsann::ConfigError("cannot write '" + eval_output + "'");
        hetsann::cmd_eval(checkpoint, out);
      }
    } else if (gradcheck->parsed()) {
      if (!hetsann::cmd_gradcheck(gc, std::cout).passed) return hetsann::kExitVerification;
    } else if (sweep->parsed()) {
      hetsann::cmd_sweep(sweep_flags.resolve(*sweep), sweep_param, sweep_values, std::cout);
    } else if (synth->parsed()) {
      const hetsann::HetGraph g = hetsann::cmd_synth(spec, synth_out);
      std::cout << "wrote " << g.num_nodes() << " nodes and " << g.num_edges() << " edges to " << synth_out << '\n';
    }
  } catch (const hetsann::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return hetsann::kExitConfig;
  } catch (const hetsann::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return hetsann::kExitData;
  } catch (const hetsann::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return hetsann::kExitVerification;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return hetsann::kExitData;
  }
  return hetsann::kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
