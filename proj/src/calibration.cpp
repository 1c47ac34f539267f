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

#include "losslab/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "text_util.hpp"

namespace losslab {

namespace {

void check_rows(Eigen::Index rows, const Labels& labels, Eigen::Index num_classes, const char* what) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw ShapeMismatch(std::string(what) + ": " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(rows) + " rows");
  }
  if (rows == 0) throw InvalidInput(std::string(what) + ": no examples");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw InvalidInput(std::string(what) + ": label " + std::to_string(y) + " outside [0, " +
                         std::to_string(num_classes) + ")");
    }
  }
}

void softmax_rows_inplace(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp().matrix();
    m.row(i) /= m.row(i).sum();
  }
}

}  // namespace

ProbabilitySource probability_source(const LossSpec& spec) {
  return is_sigmoid(spec) ? ProbabilitySource::kSigmoidNormalized : ProbabilitySource::kSoftmax;
}

ProbabilityBatch probs_from_logits(const Matrix& logits, ProbabilitySource source) {
  if (logits.cols() < 1) throw InvalidInput("probs_from_logits: no classes");
  if (!logits.allFinite()) throw InvalidInput("probs_from_logits: non-finite logits");
  ProbabilityBatch out{logits, source, argmax_rows(logits)};
  if (source == ProbabilitySource::kSigmoidNormalized) {
    // log sigmoid(l) = -softplus(-l)
    out.probs = logits.unaryExpr([](double l) { return -softplus(-l); });
  }
  softmax_rows_inplace(out.probs);
  return out;
}

double topk_accuracy(const Matrix& logits, const Labels& labels, int k) {
  check_rows(logits.rows(), labels, logits.cols(), "topk_accuracy");
  if (k < 1 || k > logits.cols()) {
    throw InvalidInput("topk_accuracy: k=" + std::to_string(k) + " outside [1, " +
                       std::to_string(logits.cols()) + "]");
  }
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const double ly = logits(i, y);
    int ahead = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      if (logits(i, c) > ly || (logits(i, c) == ly && c < y)) ++ahead;
    }
    hits += ahead < k;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double nll(const ProbabilityBatch& probs, const Labels& labels) {
  check_rows(probs.probs.rows(), labels, probs.probs.cols(), "nll");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total -= std::log(std::max(probs.probs(static_cast<Eigen::Index>(i), labels[i]), kProbabilityFloor));
  }
  return total / static_cast<double>(labels.size());
}

int calibration_bin(double confidence, int n_bins) {
  if (n_bins < 1) throw InvalidInput("calibration_bin: need at least one bin");
  const double scaled = confidence * n_bins;
  int b = static_cast<int>(std::ceil(scaled)) - 1;
  b = std::clamp(b, 0, n_bins - 1);
  // Keep the bin consistent with edges computed as b / n_bins.
  if (b > 0 && confidence <= static_cast<double>(b) / n_bins) --b;
  if (b < n_bins - 1 && confidence > static_cast<double>(b + 1) / n_bins) ++b;
  return b;
}

CalibrationReport ece(const ProbabilityBatch& probs, const Labels& labels, int n_bins) {
  check_rows(probs.probs.rows(), labels, probs.probs.cols(), "ece");
  if (n_bins < 1) throw InvalidInput("ece: need at least one bin");
  CalibrationReport report;
  report.bins.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    report.bins[b].lower = static_cast<double>(b) / n_bins;
    report.bins[b].upper = static_cast<double>(b + 1) / n_bins;
  }
  std::vector<double> correct(static_cast<std::size_t>(n_bins), 0.0);
  std::size_t total_correct = 0;
  for (Eigen::Index i = 0; i < probs.probs.rows(); ++i) {
    Eigen::Index pred = 0;
    double conf = probs.probs.row(i).maxCoeff(&pred);
    if (!probs.predicted.empty()) {
      pred = probs.predicted[static_cast<std::size_t>(i)];
      conf = probs.probs(i, pred);
    }
    const bool hit = pred == labels[static_cast<std::size_t>(i)];
    CalibrationBin& bin = report.bins[calibration_bin(conf, n_bins)];
    ++bin.count;
    bin.confidence += conf;
    correct[&bin - report.bins.data()] += hit;
    total_correct += hit;
  }
  const double n = static_cast<double>(labels.size());
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    CalibrationBin& bin = report.bins[b];
    if (bin.count == 0) continue;
    const double c = static_cast<double>(bin.count);
    bin.accuracy = correct[b] / c;
    bin.confidence /= c;
    report.ece += (c / n) * std::abs(bin.accuracy - bin.confidence);
  }
  report.accuracy = static_cast<double>(total_correct) / n;
  report.nll = nll(probs, labels);
  return report;
}

TemperatureFit fit_temperature(const Matrix& logits, const Labels& labels, ProbabilitySource source,
                               int n_bins) {
  check_rows(logits.rows(), labels, logits.cols(), "fit_temperature");
  auto objective = [&](double log_t) {
    const double v = nll(probs_from_logits(logits / std::exp(log_t), source), labels);
    if (!std::isfinite(v)) {
      throw InvalidInput("fit_temperature: non-finite NLL at log T = " + internal::format_double(log_t));
    }
    return v;
  };

  constexpr double kLo = -5.0;
  constexpr double kHi = 5.0;
  constexpr double kTol = 1e-6;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kLo, b = kHi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > kTol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double best = 0.5 * (a + b);
  if (objective(0.0) <= objective(best)) best = 0.0;

  TemperatureFit fit;
  fit.temperature = std::exp(best);
  fit.before = ece(probs_from_logits(logits, source), labels, n_bins);
  fit.after = ece(probs_from_logits(logits / fit.temperature, source), labels, n_bins);
  fit.after.temperature = fit.temperature;
  return fit;
}

std::string to_string(AgreementVariant variant) {
  switch (variant) {
    case AgreementVariant::kSameTop1:
      return "same_top1";
    case AgreementVariant::kBothCorrectOrBothIncorrect:
      return "both_correct_or_incorrect";
    case AgreementVariant::kAgreeOnMutualErrors:
      return "mutual_errors";
  }
  return "unknown";
}

AgreementVariant parse_agreement_variant(const std::string& text) {
  for (AgreementVariant v : {AgreementVariant::kSameTop1, AgreementVariant::kBothCorrectOrBothIncorrect,
                             AgreementVariant::kAgreeOnMutualErrors}) {
    if (text == to_string(v)) return v;
  }
  throw InvalidInput("unknown agreement variant '" + text +
                     "' (expected same_top1, both_correct_or_incorrect or mutual_errors)");
}

std::optional<double> agreement(const Labels& a, const Labels& b, const Labels& labels,
                                AgreementVariant variant) {
  if (a.size() != labels.size() || b.size() != labels.size()) {
    throw ShapeMismatch("agreement: prediction and label lengths differ");
  }
  if (labels.empty()) throw InvalidInput("agreement: no examples");
  std::size_t hits = 0, considered = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    switch (variant) {
      case AgreementVariant::kSameTop1:
        hits += a[i] == b[i];
        ++considered;
        break;
      case AgreementVariant::kBothCorrectOrBothIncorrect:
        hits += (a[i] == labels[i]) == (b[i] == labels[i]);
        ++considered;
        break;
      case AgreementVariant::kAgreeOnMutualErrors:
        if (a[i] != labels[i] && b[i] != labels[i]) {
          hits += a[i] == b[i];
          ++considered;
        }
        break;
    }
  }
  if (considered == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(considered);
}

AgreementMatrix agreement_matrix(const std::vector<Labels>& predictions, const Labels& labels,
                                 AgreementVariant variant, std::vector<std::string> model_names) {
  if (predictions.empty()) throw InvalidInput("agreement_matrix: no models");
  if (model_names.empty()) {
    for (std::size_t i = 0; i < predictions.size(); ++i) model_names.push_back("model" + std::to_string(i));
  }
  if (model_names.size() != predictions.size()) throw ShapeMismatch("agreement_matrix: names and models differ");
  const auto m = static_cast<Eigen::Index>(predictions.size());
  AgreementMatrix out{std::move(model_names), Matrix(m, m), variant};
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      auto v = agreement(predictions[i], predictions[j], labels, variant);
      out.agree(i, j) = out.agree(j, i) = v ? *v : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

Matrix agreement_distance(const AgreementMatrix& m) {
  Matrix d = m.agree.unaryExpr([](double a) { return std::isnan(a) ? 1.0 : 1.0 - a; });
  d.diagonal().setZero();
  return d;
}

std::vector<Merge> linkage_dendrogram(const Matrix& distance) {
  const Eigen::Index n = distance.rows();
  if (distance.cols() != n) throw ShapeMismatch("linkage_dendrogram: distance matrix is not square");
  if (n < 1) throw InvalidInput("linkage_dendrogram: empty distance matrix");
  if (!distance.allFinite()) throw InvalidInput("linkage_dendrogram: non-finite distances");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (distance(i, i) != 0.0) throw InvalidInput("linkage_dendrogram: nonzero diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(distance(i, j) - distance(j, i)) > 1e-12) {
        throw InvalidInput("linkage_dendrogram: asymmetric at (" + std::to_string(i) + ", " +
                           std::to_string(j) + ")");
      }
      if (distance(i, j) < 0.0) throw InvalidInput("linkage_dendrogram: negative distance");
    }
  }

  // Slots hold live clusters; d is kept in slot coordinates and updated with
  // the Lance-Williams rule for average linkage.
  Matrix d = distance;
  std::vector<int> id(static_cast<std::size_t>(n));
  std::vector<int> size(static_cast<std::size_t>(n), 1);
  std::vector<bool> live(static_cast<std::size_t>(n), true);
  for (Eigen::Index i = 0; i < n; ++i) id[i] = static_cast<int>(i);

  std::vector<Merge> merges;
  for (Eigen::Index step = 0; step + 1 < n; ++step) {
    Eigen::Index bi = -1, bj = -1;
    double best = 0.0;
    std::pair<int, int> best_ids{0, 0};
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!live[i]) continue;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (!live[j]) continue;
        std::pair<int, int> ids = std::minmax(id[i], id[j]);
        if (bi < 0 || d(i, j) < best || (d(i, j) == best && ids < best_ids)) {
          bi = i;
          bj = j;
          best = d(i, j);
          best_ids = ids;
        }
      }
    }
    const int na = size[bi], nb = size[bj];
    merges.push_back({best_ids.first, best_ids.second, best, na + nb});
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!live[k] || k == bi || k == bj) continue;
      const double v = (na * d(bi, k) + nb * d(bj, k)) / (na + nb);
      d(bi, k) = d(k, bi) = v;
    }
    live[bj] = false;
    size[bi] = na + nb;
    id[bi] = static_cast<int>(n + step);
  }
  return merges;
}

Labels ensemble_modal(const std::vector<Labels>& predictions) {
  if (predictions.empty()) throw InvalidInput("ensemble_modal: no models");
  const std::size_t n = predictions.front().size();
  for (const Labels& p : predictions) {
    if (p.size() != n) throw ShapeMismatch("ensemble_modal: prediction lengths differ");
  }
  Labels out(n);
  std::map<int, int> votes;
  for (std::size_t i = 0; i < n; ++i) {
    votes.clear();
    for (const Labels& p : predictions) ++votes[p[i]];
    int best = votes.begin()->first, best_votes = 0;
    for (auto [cls, v] : votes) {  // ascending class order keeps the lowest on ties
      if (v > best_votes) {
        best = cls;
        best_votes = v;
      }
    }
    out[i] = best;
  }
  return out;
}

Labels argmax_rows(const Matrix& scores) {
  Labels out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index c = 0;
    scores.row(i).maxCoeff(&c);
    out[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  return out;
}

void write_predictions_csv(const std::filesystem::path& path, const Labels& predicted,
                           const std::vector<double>& confidence) {
  if (predicted.size() != confidence.size()) throw ShapeMismatch("write_predictions_csv: length mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "example_id,predicted_class,confidence\n";
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    out << i << ',' << predicted[i] << ',' << internal::format_double(confidence[i]) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

PredictionFile read_predictions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || internal::trim(line) != "example_id,predicted_class,confidence") {
    throw ParseError(path.string() + ":1: missing prediction header", 1);
  }
  PredictionFile out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::trim(line).empty()) continue;
    auto f = internal::split(line, ',');
    std::size_t id = 0;
    int cls = 0;
    double conf = 0.0;
    if (f.size() != 3 || !internal::parse_int(f[0], &id) || !internal::parse_int(f[1], &cls) ||
        !internal::parse_double(f[2], &conf) || id != out.predicted.size() || cls < 0) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed prediction row", line_no);
    }
    out.predicted.push_back(cls);
    out.confidence.push_back(conf);
  }
  return out;
}

}  // namespace losslab
