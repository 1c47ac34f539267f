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

// Experiment configuration read from an INI file. See README.md for the
// schema. Unknown sections and keys are errors.

#ifndef LOSSLAB_CONFIG_HPP_
#define LOSSLAB_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "losslab/data.hpp"
#include "losslab/losses.hpp"
#include "losslab/trainer.hpp"

namespace losslab {

struct DatasetConfig {
  enum class Source { kBlobs, kCsv, kIdx };
  Source source = Source::kBlobs;

  // blobs
  int n_per_class = 500;
  int num_classes = 10;
  int feature_dim = 16;
  double spread = 1.5;
  std::uint64_t seed = 0;

  // files
  std::filesystem::path path;
  std::optional<std::filesystem::path> labels_path;

  // Stratified fraction held out as the evaluation split.
  double eval_fraction = 0.2;
  std::uint64_t split_seed = 0;
};

struct AnalysisFlags {
  bool cka = true;
  bool separation = true;
  bool sparsity = true;
  bool calibration = true;
  bool agreement = true;
  bool avh = true;
  bool spectra = true;
  bool transfer = false;
};

// Transfer task for blobs datasets: `extra_classes` further blob classes are
// generated alongside the training classes but never trained on. Their
// labels are merged into `coarse_classes` groups of consecutive classes, and
// a linear probe on frozen penultimate features is fit on them.
struct TransferConfig {
  int extra_classes = 10;
  int coarse_classes = 5;
  double test_fraction = 0.5;
  double val_fraction = 0.1;
  int max_iterations = 2000;
  double tolerance = 1e-5;
};

// One loss in the experiment, optionally with its own learning rate and
// weight decay. Text form: "<loss spec>[@lr=<value>][,wd=<value>]", e.g.
// "cosine_softmax(tau=0.01)@lr=0.02".
struct LossRun {
  LossSpec spec;
  std::optional<double> peak_lr;
  std::optional<double> weight_decay_product;
};

LossRun parse_loss_run(const std::string& text);
std::string to_string(const LossRun& run);

// Directory-safe name of a loss run, e.g. "cosine_softmax_tau-0.05".
std::string run_tag(const LossRun& run);

// Grid searched by the sweep command: each loss is trained at every
// (peak_lr, weight_decay_product) pair and seed on a stratified split of
// the training data, and scored by its best holdout accuracy over epochs.
struct SweepConfig {
  std::vector<double> peak_lrs = {0.01, 0.0316, 0.1, 0.316};
  std::vector<double> weight_decay_products = {0.0};
  std::vector<std::uint64_t> seeds = {0};
  double holdout_fraction = 0.1;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<int> hidden = {64, 64};
  TrainConfig train;  // train.loss and train.seed are set per run
  std::vector<std::uint64_t> seeds = {0};
  std::vector<LossRun> losses;
  AnalysisFlags analyses;
  TransferConfig transfer;
  SweepConfig sweep;
  double kde_bandwidth = 0.05;
  std::filesystem::path output_dir = "losslab_out";
  int jobs = 1;

  void validate() const;

  // train with the loss, seed and per-loss overrides of one run applied.
  TrainConfig train_config(const LossRun& run, std::uint64_t seed) const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin = "<config>");

// Canonical INI text for a config; parse_experiment_config reads it back.
std::string to_ini(const ExperimentConfig& config);

}  // namespace losslab

#endif  // LOSSLAB_CONFIG_HPP_
