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

// Prediction-level evaluation: accuracy, NLL, ECE, temperature scaling,
// agreement between models, average-linkage clustering and ensembling.

#ifndef LOSSLAB_CALIBRATION_HPP_
#define LOSSLAB_CALIBRATION_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "losslab/common.hpp"
#include "losslab/losses.hpp"

namespace losslab {

enum class ProbabilitySource { kSoftmax, kSigmoidNormalized };

struct ProbabilityBatch {
  Matrix probs;  // n x K, rows sum to one
  ProbabilitySource source = ProbabilitySource::kSoftmax;
  // Argmax of the source logits. Saturated probabilities can tie where the
  // logits do not. Empty means predict from probs.
  Labels predicted;
};

ProbabilitySource probability_source(const LossSpec& spec);

// Softmax rows, or per-class sigmoids divided by their row sum. The sigmoid
// form is computed as softmax(log sigmoid(l)) so saturated rows stay finite.
ProbabilityBatch probs_from_logits(const Matrix& logits, ProbabilitySource source);

// Fraction of rows whose label ranks in the top k. A class outranks the
// label if its logit is larger, or equal with a lower class index.
double topk_accuracy(const Matrix& logits, const Labels& labels, int k);

// Mean -log p_label with p clamped below at 1e-12.
inline constexpr double kProbabilityFloor = 1e-12;
double nll(const ProbabilityBatch& probs, const Labels& labels);

struct CalibrationBin {
  double lower = 0.0;  // exclusive, except bin 0 also takes confidence 0
  double upper = 0.0;  // inclusive
  std::size_t count = 0;
  double accuracy = 0.0;    // 0 for an empty bin
  double confidence = 0.0;  // mean max-probability, 0 for an empty bin
};

struct CalibrationReport {
  double nll = 0.0;
  double ece = 0.0;
  double accuracy = 0.0;
  std::optional<double> temperature;
  std::vector<CalibrationBin> bins;
};

// Expected calibration error over `n_bins` equal-width bins on (0, 1],
// right-closed, with confidence = max row probability and the prediction
// the first maximal class. Also fills nll and accuracy.
CalibrationReport ece(const ProbabilityBatch& probs, const Labels& labels, int n_bins = 15);

// Bin index used by ece() for one confidence value.
int calibration_bin(double confidence, int n_bins);

struct TemperatureFit {
  double temperature = 1.0;
  CalibrationReport before;
  CalibrationReport after;  // after.temperature is set
};

// Minimizes NLL of probs_from_logits(logits / T) by golden-section search on
// log T over [-5, 5] to a bracket width of 1e-6. T = 1 is kept if the
// search does not improve on it.
TemperatureFit fit_temperature(const Matrix& logits, const Labels& labels, ProbabilitySource source,
                               int n_bins = 15);

// ---- Agreement between models -----------------------------------------------

enum class AgreementVariant {
  kSameTop1,                    // same predicted class
  kBothCorrectOrBothIncorrect,  // same correctness
  kAgreeOnMutualErrors,         // same prediction, among examples both get wrong
};

std::string to_string(AgreementVariant variant);
AgreementVariant parse_agreement_variant(const std::string& text);

// Agreement of two prediction vectors. nullopt for kAgreeOnMutualErrors when
// the models share no errors.
std::optional<double> agreement(const Labels& a, const Labels& b, const Labels& labels,
                                AgreementVariant variant);

struct AgreementMatrix {
  std::vector<std::string> models;
  Matrix agree;  // NaN marks a missing value
  AgreementVariant variant = AgreementVariant::kSameTop1;
};

AgreementMatrix agreement_matrix(const std::vector<Labels>& predictions, const Labels& labels,
                                 AgreementVariant variant,
                                 std::vector<std::string> model_names = {});

// ---- Clustering and ensembling ----------------------------------------------

// One agglomeration step. Leaves are 0..n-1; the cluster formed by merge i
// gets id n + i. a < b.
struct Merge {
  int a = 0;
  int b = 0;
  double height = 0.0;
  int size = 0;
};

// Average-linkage agglomerative clustering of a symmetric, zero-diagonal,
// non-negative distance matrix. Each step merges the closest pair; ties go
// to the pair with the smallest (a, b). Returns n - 1 merges.
std::vector<Merge> linkage_dendrogram(const Matrix& distance);

// 1 - agreement; missing values become distance 1.
Matrix agreement_distance(const AgreementMatrix& m);

// Per-example modal prediction; ties go to the lowest class index.
Labels ensemble_modal(const std::vector<Labels>& predictions);

// First maximal column of each row.
Labels argmax_rows(const Matrix& scores);

// ---- Files ------------------------------------------------------------------

// example_id,predicted_class,confidence
struct PredictionFile {
  Labels predicted;
  std::vector<double> confidence;
};
void write_predictions_csv(const std::filesystem::path& path, const Labels& predicted,
                           const std::vector<double>& confidence);
PredictionFile read_predictions_csv(const std::filesystem::path& path);

}  // namespace losslab

#endif  // LOSSLAB_CALIBRATION_HPP_
