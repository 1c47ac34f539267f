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

// L2-regularized multinomial logistic regression on frozen features, and the
// validation sweep over the regularization strength.

#ifndef LOSSLAB_PROBE_HPP_
#define LOSSLAB_PROBE_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "losslab/common.hpp"

namespace losslab {

struct LogregModel {
  Matrix weights;  // K x d
  Vector bias;     // K

  Matrix logits(const Matrix& features) const;
};

// sum_i xent(W x_i + b, y_i) + (lambda / 2) ||W||_F^2. The bias is not
// penalized. Gradients are written when the pointers are non-null.
double logreg_objective(const Matrix& features, const Labels& labels, double lambda,
                        const LogregModel& model, Matrix* grad_weights = nullptr,
                        Vector* grad_bias = nullptr);

struct LogregFit {
  LogregModel model;
  double objective = 0.0;
  double grad_norm = 0.0;  // of the objective divided by n
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // objective after each accepted step, first entry at the start
};

// Full-batch gradient descent. Each step starts from the Barzilai-Borwein
// length of the previous step and backtracks until the Armijo condition
// holds, so the objective never increases. Stops when the gradient norm of
// objective / n falls to `tolerance`; `converged` is false if
// `max_iterations` ran out first. `init` defaults to zeros.
LogregFit fit_logreg(const Matrix& features, const Labels& labels, int num_classes, double lambda,
                     const LogregModel* init = nullptr, double tolerance = 1e-6,
                     int max_iterations = 5000);

// 45 values 10^(-6 + 11 i / 44), i = 0..44.
std::vector<double> default_lambda_grid();

struct ProbeConfig {
  std::vector<double> lambda_grid = default_lambda_grid();
  double val_fraction = 0.1;
  int max_iterations = 5000;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;

  // Throws unless the grid is non-empty, strictly increasing and
  // non-negative, and 0 < val_fraction < 1.
  void validate() const;
};

struct ProbeResult {
  double best_lambda = 0.0;
  std::vector<double> lambdas;
  std::vector<double> val_accuracy;
  std::vector<double> val_objective;   // training-part objective at each grid point
  std::vector<double> weight_norms;    // ||W||_F at each grid point
  std::vector<bool> converged;
  double train_accuracy = 0.0;  // of the refit on the full training set
  double test_accuracy = 0.0;
  bool refit_converged = false;
  LogregModel model;
};

// Splits a stratified validation set off the training data, sweeps lambda in
// increasing order warm-starting each fit from the previous one, picks the
// lambda with the best validation accuracy (larger lambda on ties), refits
// on all training data from zeros and scores the test set.
ProbeResult sweep_and_retrain(const Matrix& train_features, const Labels& train_labels,
                              const Matrix& test_features, const Labels& test_labels,
                              const ProbeConfig& config = {});

double logreg_accuracy(const LogregModel& model, const Matrix& features, const Labels& labels);

// JSON with the per-lambda curves, the chosen lambda and the accuracies.
void write_probe_json(const ProbeResult& result, const std::filesystem::path& path);

}  // namespace losslab

#endif  // LOSSLAB_PROBE_HPP_
