/* Copyright 2026 The losslab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// losslab <subcommand> --config FILE [--out DIR] [--seed N] [--jobs N]

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "losslab/config.hpp"
#include "losslab/experiment.hpp"
#include "losslab/report.hpp"

namespace fs = std::filesystem;
using namespace losslab;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

struct Context {
  ExperimentConfig config;
  fs::path out;
  int jobs = 1;
};

Context load(const Options& o) {
  Context c;
  c.config = load_experiment_config(o.config_path);
  if (o.out) c.config.output_dir = *o.out;
  if (o.seed) c.config.seeds = {*o.seed};
  if (o.jobs) c.config.jobs = *o.jobs;
  c.config.validate();
  c.out = c.config.output_dir;
  c.jobs = c.config.jobs;
  return c;
}

void print_written(const std::vector<fs::path>& paths) {
  for (const fs::path& p : paths) std::cout << p.string() << '\n';
}

int cmd_train(const Context& c) {
  const auto outcomes = run_experiment(c.config, c.out, c.jobs);
  int failed = 0;
  for (const RunOutcome& o : outcomes) {
    if (o.error) {
      ++failed;
      std::cerr << "FAILED " << run_dir_name(o.key) << ": " << *o.error << '\n';
    } else {
      std::cout << run_dir_name(o.key) << "  train_acc=" << o.train_accuracy << "  eval_acc=" << o.eval_accuracy
                << '\n';
    }
  }
  return failed ? 1 : 0;
}

int cmd_dump(const Context& c) {
  const ExperimentData data = load_experiment_data(c.config);
  const auto runs = find_runs(c.config, c.out);
  parallel_for(runs.size(), c.jobs, [&](std::size_t i) { dump_run(c.config, data, runs[i].key, runs[i].dir); });
  for (const auto& r : runs) std::cout << r.dir.string() << '\n';
  return 0;
}

int cmd_sweep(const Context& c) {
  const auto choices = run_sweep(c.config, c.out / "sweep", c.jobs);
  for (const SweepChoice& s : choices) {
    std::cout << to_string(s.run) << "  holdout_acc=" << s.mean_holdout_accuracy << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"losslab: loss functions and the representations they learn"};
  app.require_subcommand(1);
  Options opts;
  app.add_option("--config", opts.config_path, "experiment INI file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", opts.out, "output directory (overrides [experiment] output_dir)");
  app.add_option("--seed", opts.seed, "run only this seed");
  app.add_option("--jobs", opts.jobs, "worker threads")->check(CLI::Range(1, 1 << 16));
  app.fallthrough();

  auto* train = app.add_subcommand("train", "train every (loss, seed) run and write its artifacts");
  auto* dump = app.add_subcommand("dump", "rewrite activation, logit and prediction dumps from saved models");
  auto* analyze = app.add_subcommand("analyze", "representation analyses: R², CKA, sparsity, AVH, spectra, density");
  auto* calibrate = app.add_subcommand("calibrate", "NLL, ECE and temperature scaling");
  auto* agree = app.add_subcommand("agreement", "prediction agreement matrices, linkage and ensembles");
  auto* transfer = app.add_subcommand("transfer", "linear probes on frozen features of the transfer task");
  auto* report = app.add_subcommand("report", "every enabled analysis plus report.md");
  auto* sweep = app.add_subcommand("sweep", "learning rate and weight decay grid search on a holdout split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const Context c = load(opts);
    const fs::path report_dir = c.out / "report";
    if (*train) return cmd_train(c);
    if (*dump) return cmd_dump(c);
    if (*sweep) return cmd_sweep(c);
    if (*report) {
      print_written(write_full_report(c.config, c.out, c.jobs));
      return 0;
    }
    const auto runs = find_runs(c.config, c.out);
    if (*analyze) print_written(write_representation_report(c.config, runs, report_dir));
    if (*calibrate) print_written(write_calibration_report(runs, report_dir));
    if (*agree) print_written(write_agreement_report(runs, report_dir));
    if (*transfer) {
      if (!c.config.analyses.transfer) throw InvalidInput("the transfer command needs [analyses] transfer = true");
      print_written(write_transfer_report(c.config, runs, report_dir, c.jobs));
    }
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "losslab: parse error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "losslab: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "losslab: unexpected error: " << e.what() << '\n';
    return 3;
  }
}
