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

// Config-driven runs. Every (loss, seed) pair trains one model and writes a
// run directory:
//
//   <out>/runs/<run_tag>__seed<seed>/
//     model.bin          trained weights (EMA weights when EMA is enabled)
//     log.csv            per-epoch log
//     run.json           loss, seed, accuracies
//     features.dump      penultimate features of the eval split, with labels
//     train_features.dump  the same for the training split
//     hidden<i>.dump     hidden layer i activations of the eval split
//     logits.csv         eval-split logits as used for prediction
//     predictions.csv    eval-split predictions
//     transfer_train.dump, transfer_test.dump   (transfer analysis only)
//
// Outputs depend only on the config, never on --jobs or run order.

#ifndef LOSSLAB_EXPERIMENT_HPP_
#define LOSSLAB_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "losslab/config.hpp"
#include "losslab/data.hpp"
#include "losslab/trainer.hpp"

namespace losslab {

struct ExperimentData {
  Batch train;
  Batch eval;
  // Transfer task: unseen classes merged into coarse labels.
  std::optional<Batch> transfer_train;
  std::optional<Batch> transfer_test;
};

ExperimentData load_experiment_data(const ExperimentConfig& config);

struct RunKey {
  LossRun run;
  std::uint64_t seed = 0;
};

std::string run_dir_name(const RunKey& key);

// Runs in config order: losses outer, seeds inner.
std::vector<RunKey> plan_runs(const ExperimentConfig& config);

struct RunOutcome {
  RunKey key;
  std::filesystem::path dir;
  double train_accuracy = 0.0;
  double eval_accuracy = 0.0;
  std::optional<std::string> error;
};

// Trains one model and writes its run directory.
RunOutcome run_single(const ExperimentConfig& config, const ExperimentData& data, const RunKey& key,
                      const std::filesystem::path& runs_dir);

// Rewrites the dump files of a run directory from its model.bin.
void dump_run(const ExperimentConfig& config, const ExperimentData& data, const RunKey& key,
              const std::filesystem::path& run_dir);

// Runs every planned (loss, seed) with `jobs` worker threads. Failed runs
// are reported in their RunOutcome and in <out>/runs/failures.txt instead
// of aborting the others.
std::vector<RunOutcome> run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                       int jobs);

struct SweepPoint {
  LossRun run;  // with the swept peak_lr and weight_decay_product set
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double best_holdout_accuracy = 0.0;
  std::optional<std::string> error;
};

struct SweepChoice {
  LossRun run;
  double mean_holdout_accuracy = 0.0;
};

// Grid search over config.sweep on a stratified holdout carved out of the
// training split. One choice per loss: highest seed-mean best-epoch holdout
// accuracy, the earliest grid point on ties. Writes sweep.csv and
// sweep_best.txt into out_dir.
std::vector<SweepChoice> run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir, int jobs,
                                   std::vector<SweepPoint>* points = nullptr);

// Calls fn(i) for i in [0, count) on `jobs` threads. The first exception
// thrown is rethrown after all workers stop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace losslab

#endif  // LOSSLAB_EXPERIMENT_HPP_
