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

// Reports computed from run directories (see experiment.hpp). Nothing here
// trains; every table is a view over the saved artifacts.

#ifndef LOSSLAB_REPORT_HPP_
#define LOSSLAB_REPORT_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "losslab/calibration.hpp"
#include "losslab/config.hpp"
#include "losslab/experiment.hpp"
#include "losslab/probe.hpp"

namespace losslab {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n); 0 when n < 2
  std::size_t n = 0;
};

MeanStderr mean_stderr(const std::vector<double>& values);

struct RunArtifacts {
  RunKey key;
  std::filesystem::path dir;
};

// Run directories of every planned run. Throws IoError naming the first
// missing one.
std::vector<RunArtifacts> find_runs(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// ---- Per-run records ---------------------------------------------------------

struct SeparationRecord {
  double cosine = 0.0;
  double cosine_mean_subtracted = 0.0;
  double euclidean = 0.0;
  // Zero rows (examples with every penultimate unit off) have no direction;
  // they are left out of the plain cosine index and counted here.
  std::size_t zero_rows = 0;
};

SeparationRecord separation_record(const Matrix& features, const Labels& labels);

struct CalibrationRecord {
  TemperatureFit fit;
  double top5_accuracy = 0.0;
};

CalibrationRecord calibration_record(const Matrix& logits, const Labels& labels, ProbabilitySource source);

// Linear probe on a run's transfer dumps.
ProbeResult transfer_record(const ExperimentConfig& config, const RunArtifacts& run);

// ---- Cross-run summaries -----------------------------------------------------

struct AgreementSummary {
  AgreementMatrix matrix;       // one row per run, in run order
  std::vector<int> group;       // loss index of each run
  MeanStderr within_loss;       // over distinct same-loss pairs
  MeanStderr across_loss;       // over different-loss pairs
  std::vector<Merge> linkage;   // average linkage on 1 - agreement
  // Every merge of two single runs pairs runs of the same loss.
  bool first_merges_within_loss = false;
};

AgreementSummary agreement_summary(const std::vector<RunArtifacts>& runs, const Labels& labels,
                                   AgreementVariant variant);

// ---- Report writers ----------------------------------------------------------

// Each writer reads the run directories and writes CSV/JSON files into
// report_dir, returning the paths it wrote.
std::vector<std::filesystem::path> write_accuracy_report(const std::vector<RunArtifacts>& runs,
                                                         const std::filesystem::path& report_dir);
std::vector<std::filesystem::path> write_representation_report(const ExperimentConfig& config,
                                                               const std::vector<RunArtifacts>& runs,
                                                               const std::filesystem::path& report_dir);
std::vector<std::filesystem::path> write_calibration_report(const std::vector<RunArtifacts>& runs,
                                                            const std::filesystem::path& report_dir);
std::vector<std::filesystem::path> write_agreement_report(const std::vector<RunArtifacts>& runs,
                                                          const std::filesystem::path& report_dir);
std::vector<std::filesystem::path> write_transfer_report(const ExperimentConfig& config,
                                                         const std::vector<RunArtifacts>& runs,
                                                         const std::filesystem::path& report_dir, int jobs);

// Everything enabled in config.analyses plus accuracy and report.md.
std::vector<std::filesystem::path> write_full_report(const ExperimentConfig& config,
                                                     const std::filesystem::path& out_dir, int jobs);

}  // namespace losslab

#endif  // LOSSLAB_REPORT_HPP_
