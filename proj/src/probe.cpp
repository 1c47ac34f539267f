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

#include "losslab/probe.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "losslab/data.hpp"

namespace losslab {

namespace {

void check_problem(const Matrix& x, const Labels& y, int num_classes, const char* what) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
    throw ShapeMismatch(std::string(what) + ": " + std::to_string(y.size()) + " labels for " +
                        std::to_string(x.rows()) + " rows");
  }
  if (y.empty()) throw InvalidInput(std::string(what) + ": no examples");
  if (!x.allFinite()) throw InvalidInput(std::string(what) + ": non-finite features");
  for (int c : y) {
    if (c < 0 || c >= num_classes) throw InvalidInput(std::string(what) + ": label out of range");
  }
}

double squared_norm(const Matrix& w, const Vector& b) { return w.squaredNorm() + b.squaredNorm(); }

}  // namespace

Matrix LogregModel::logits(const Matrix& features) const {
  return (features * weights.transpose()).rowwise() + bias.transpose();
}

double logreg_objective(const Matrix& features, const Labels& labels, double lambda,
                        const LogregModel& model, Matrix* grad_weights, Vector* grad_bias) {
  Matrix z = model.logits(features);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const double mx = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - mx).exp().matrix();
    const double sum = z.row(i).sum();
    total += std::log(sum) + mx - (std::log(z(i, y)) + mx);
    z.row(i) /= sum;
    z(i, y) -= 1.0;  // z now holds p - onehot
  }
  total += 0.5 * lambda * model.weights.squaredNorm();
  if (grad_weights) *grad_weights = z.transpose() * features + lambda * model.weights;
  if (grad_bias) *grad_bias = z.colwise().sum().transpose();
  return total;
}

LogregFit fit_logreg(const Matrix& features, const Labels& labels, int num_classes, double lambda,
                     const LogregModel* init, double tolerance, int max_iterations) {
  if (num_classes < 2) throw InvalidInput("fit_logreg: need at least 2 classes");
  check_problem(features, labels, num_classes, "fit_logreg");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidHyperparameter("fit_logreg: lambda must be >= 0");
  if (!(tolerance > 0.0)) throw InvalidHyperparameter("fit_logreg: tolerance must be positive");
  if (max_iterations < 0) throw InvalidHyperparameter("fit_logreg: max_iterations must be >= 0");

  LogregFit fit;
  if (init) {
    if (init->weights.rows() != num_classes || init->weights.cols() != features.cols() ||
        init->bias.size() != num_classes) {
      throw ShapeMismatch("fit_logreg: initial weights have the wrong shape");
    }
    fit.model = *init;
  } else {
    fit.model = {Matrix::Zero(num_classes, features.cols()), Vector::Zero(num_classes)};
  }
  const double n = static_cast<double>(labels.size());

  Matrix gw;
  Vector gb;
  double f = logreg_objective(features, labels, lambda, fit.model, &gw, &gb);
  fit.objective_trace.push_back(f);
  // Curvature bound of the data term: 1/2 sum_i (||x_i||^2 + 1).
  double step = 1.0 / (0.5 * (features.squaredNorm() + n) + lambda);

  constexpr double kArmijo = 1e-4;
  LogregModel trial;
  Matrix gw_t;
  Vector gb_t;
  while (true) {
    const double g2 = squared_norm(gw, gb);
    fit.grad_norm = std::sqrt(g2) / n;
    if (fit.grad_norm <= tolerance) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= max_iterations) break;

    double alpha = step;
    double f_t = 0.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, alpha *= 0.5) {
      trial.weights = fit.model.weights - alpha * gw;
      trial.bias = fit.model.bias - alpha * gb;
      f_t = logreg_objective(features, labels, lambda, trial, &gw_t, &gb_t);
      if (std::isfinite(f_t) && f_t <= f - kArmijo * alpha * g2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no decrease representable in double precision

    const double sy = -alpha * ((gw_t - gw).cwiseProduct(gw).sum() + (gb_t - gb).dot(gb));
    const double ss = alpha * alpha * g2;
    step = sy > 0.0 ? ss / sy : 2.0 * alpha;

    std::swap(fit.model, trial);
    std::swap(gw, gw_t);
    std::swap(gb, gb_t);
    f = f_t;
    fit.objective_trace.push_back(f);
    ++fit.iterations;
  }
  fit.objective = f;
  return fit;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  grid.reserve(45);
  for (int i = 0; i < 45; ++i) grid.push_back(std::pow(10.0, -6.0 + 11.0 * i / 44.0));
  return grid;
}

void ProbeConfig::validate() const {
  if (lambda_grid.empty()) throw InvalidHyperparameter("probe: empty lambda grid");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0) || !std::isfinite(lambda_grid[i])) {
      throw InvalidHyperparameter("probe: lambda values must be finite and >= 0");
    }
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
      throw InvalidHyperparameter("probe: lambda grid must be strictly increasing");
    }
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidHyperparameter("probe: val_fraction must be in (0, 1)");
  if (!(tolerance > 0.0)) throw InvalidHyperparameter("probe: tolerance must be positive");
  if (max_iterations < 0) throw InvalidHyperparameter("probe: max_iterations must be >= 0");
}

double logreg_accuracy(const LogregModel& model, const Matrix& features, const Labels& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows() || labels.empty()) {
    throw ShapeMismatch("logreg_accuracy: labels and rows differ");
  }
  Matrix z = model.logits(features);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index c = 0;
    z.row(i).maxCoeff(&c);
    hits += c == labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

ProbeResult sweep_and_retrain(const Matrix& train_features, const Labels& train_labels,
                              const Matrix& test_features, const Labels& test_labels,
                              const ProbeConfig& config) {
  config.validate();
  if (train_features.cols() != test_features.cols()) throw ShapeMismatch("probe: train and test widths differ");
  const int k = std::max(infer_num_classes(train_labels), infer_num_classes(test_labels));
  check_problem(train_features, train_labels, k, "probe train");
  check_problem(test_features, test_labels, k, "probe test");

  Batch all{train_features, train_labels, k};
  auto [fit_part, val_part] = stratified_split(all, config.val_fraction, config.seed);
  std::vector<bool> present(static_cast<std::size_t>(k), false);
  for (int y : fit_part.labels) present[static_cast<std::size_t>(y)] = true;
  for (int c = 0; c < k; ++c) {
    if (!present[static_cast<std::size_t>(c)]) {
      throw InvalidInput("probe: class " + std::to_string(c) + " is absent from the training split");
    }
  }
  if (val_part.size() == 0) throw InvalidInput("probe: validation split is empty");

  ProbeResult result;
  result.lambdas = config.lambda_grid;
  std::optional<LogregModel> warm;
  double best_acc = -1.0;
  for (double lambda : config.lambda_grid) {
    LogregFit fit = fit_logreg(fit_part.features, fit_part.labels, k, lambda, warm ? &*warm : nullptr,
                               config.tolerance, config.max_iterations);
    const double acc = logreg_accuracy(fit.model, val_part.features, val_part.labels);
    result.val_accuracy.push_back(acc);
    result.val_objective.push_back(fit.objective);
    result.weight_norms.push_back(fit.model.weights.norm());
    result.converged.push_back(fit.converged);
    if (acc >= best_acc) {
      best_acc = acc;
      result.best_lambda = lambda;
    }
    warm = std::move(fit.model);
  }

  LogregFit refit = fit_logreg(train_features, train_labels, k, result.best_lambda, nullptr,
                               config.tolerance, config.max_iterations);
  result.refit_converged = refit.converged;
  result.model = std::move(refit.model);
  result.train_accuracy = logreg_accuracy(result.model, train_features, train_labels);
  result.test_accuracy = logreg_accuracy(result.model, test_features, test_labels);
  return result;
}

void write_probe_json(const ProbeResult& result, const std::filesystem::path& path) {
  nlohmann::json j;
  j["best_lambda"] = result.best_lambda;
  j["train_accuracy"] = result.train_accuracy;
  j["test_accuracy"] = result.test_accuracy;
  j["refit_converged"] = result.refit_converged;
  nlohmann::json curve = nlohmann::json::array();
  for (std::size_t i = 0; i < result.lambdas.size(); ++i) {
    curve.push_back({{"lambda", result.lambdas[i]},
                     {"val_accuracy", result.val_accuracy[i]},
                     {"objective", result.val_objective[i]},
                     {"weight_norm", result.weight_norms[i]},
                     {"converged", static_cast<bool>(result.converged[i])}});
  }
  j["sweep"] = std::move(curve);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace losslab
