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

#include "losslab/repr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace losslab {

namespace {

Matrix center_columns(const Matrix& x) {
  Eigen::RowVectorXd mean = x.colwise().mean();
  return x.rowwise() - mean;
}

Matrix normalize_rows(const Matrix& x, const char* what) {
  Matrix u = x;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double norm = u.row(i).norm();
    if (!(norm > kNormEpsilon)) {
      throw DegenerateInput(std::string(what) + ": row " + std::to_string(i) + " has zero norm");
    }
    u.row(i) /= norm;
  }
  return u;
}

void check_labels(const Matrix& x, const Labels& labels, const char* what) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw ShapeMismatch(std::string(what) + ": " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(x.rows()) + " rows");
  }
  if (labels.empty()) throw InvalidInput(std::string(what) + ": no examples");
  if (!x.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

// Calls f(i, j, cosine distance) for every i < j in lexicographic order.
template <class F>
void for_each_pair(const Matrix& unit_rows, F&& f) {
  const Eigen::Index n = unit_rows.rows();
  constexpr Eigen::Index kBlock = 256;
  for (Eigen::Index b = 0; b < n; b += kBlock) {
    const Eigen::Index rows = std::min(kBlock, n - b);
    Matrix g = unit_rows.middleRows(b, rows) * unit_rows.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index i = b + r;
      for (Eigen::Index j = i + 1; j < n; ++j) f(i, j, 1.0 - g(r, j));
    }
  }
}

struct Binned {
  Vector weights;
  double count = 0.0;
};

void add_to_bins(Binned& bins, double value, double lo, double step) {
  const Eigen::Index last = bins.weights.size() - 1;
  double pos = (value - lo) / step;
  pos = std::clamp(pos, 0.0, static_cast<double>(last));
  auto g = static_cast<Eigen::Index>(std::floor(pos));
  if (g >= last) g = last - 1;
  const double frac = pos - static_cast<double>(g);
  bins.weights[g] += 1.0 - frac;
  bins.weights[g + 1] += frac;
  bins.count += 1.0;
}

Vector smooth(const Binned& bins, double lo, double hi, double bandwidth) {
  const Eigen::Index m = bins.weights.size();
  Vector out = Vector::Zero(m);
  if (bins.count == 0.0) return out;
  const double step = (hi - lo) / static_cast<double>(m - 1);
  const double norm = 1.0 / (bins.count * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  auto kernel = [&](double d) {
    const double z = d / bandwidth;
    return std::exp(-0.5 * z * z);
  };
  for (Eigen::Index g = 0; g < m; ++g) {
    if (bins.weights[g] == 0.0) continue;
    const double c = lo + step * static_cast<double>(g);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double xi = lo + step * static_cast<double>(i);
      out[i] += bins.weights[g] * (kernel(xi - c) + kernel(xi - (2.0 * lo - c)) + kernel(xi - (2.0 * hi - c)));
    }
  }
  return out * norm;
}

Binned empty_bins(int grid_points) { return Binned{Vector::Zero(grid_points), 0.0}; }

void check_kde_args(double lo, double hi, double bandwidth, int grid_points) {
  if (!(hi > lo)) throw InvalidInput("kernel density: empty interval");
  if (!(bandwidth > 0.0)) throw InvalidHyperparameter("kernel density: bandwidth must be positive");
  if (grid_points < 2) throw InvalidInput("kernel density: need at least 2 grid points");
}

}  // namespace

double linear_cka(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw ShapeMismatch("linear_cka: " + std::to_string(x.rows()) + " vs " + std::to_string(y.rows()) +
                        " examples");
  }
  if (x.rows() < 2) throw InvalidInput("linear_cka: need at least 2 examples");
  if (!x.allFinite() || !y.allFinite()) throw InvalidInput("linear_cka: non-finite entries");
  Matrix xc = center_columns(x);
  Matrix yc = center_columns(y);
  const double xx = (xc.transpose() * xc).norm();
  const double yy = (yc.transpose() * yc).norm();
  if (!(xx > 0.0) || !(yy > 0.0)) throw DegenerateInput("linear_cka: constant representation");
  const double xy = (yc.transpose() * xc).squaredNorm();
  return xy / (xx * yy);
}

SeparationStats class_separation(const Matrix& x, const Labels& labels, SeparationIndex index) {
  check_labels(x, labels, "class_separation");
  const int k = infer_num_classes(labels);
  const Eigen::Index d = x.cols();

  Matrix emb;
  switch (index) {
    case SeparationIndex::kCosine:
      emb = normalize_rows(x, "class_separation");
      break;
    case SeparationIndex::kCosineMeanSubtracted:
      emb = normalize_rows(center_columns(x), "class_separation");
      break;
    case SeparationIndex::kEuclidean:
      emb = x;
      break;
  }

  Matrix sums = Matrix::Zero(k, d);
  Vector sq = Vector::Zero(k);
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    sums.row(c) += emb.row(i);
    sq[c] += emb.row(i).squaredNorm();
    counts[static_cast<std::size_t>(c)] += 1.0;
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0.0) {
      throw InvalidInput("class_separation: class " + std::to_string(c) + " has no examples");
    }
  }

  Eigen::RowVectorXd mean_centroid = Eigen::RowVectorXd::Zero(d);
  double within = 0.0;
  double mean_sq = 0.0;
  for (int c = 0; c < k; ++c) {
    const double n = counts[static_cast<std::size_t>(c)];
    const double s2 = sums.row(c).squaredNorm();
    mean_centroid += sums.row(c) / n;
    if (index == SeparationIndex::kEuclidean) {
      within += (2.0 * n * sq[c] - 2.0 * s2) / (n * n);
      mean_sq += sq[c] / n;
    } else {
      within += 1.0 - s2 / (n * n);
    }
  }
  within /= k;
  mean_centroid /= k;

  SeparationStats out;
  out.within = within;
  out.total = index == SeparationIndex::kEuclidean
                  ? 2.0 * mean_sq / k - 2.0 * mean_centroid.squaredNorm()
                  : 1.0 - mean_centroid.squaredNorm();
  if (!(out.total > 0.0)) throw DegenerateInput("class_separation: all embeddings coincide");
  out.r2 = 1.0 - out.within / out.total;
  return out;
}

double class_separation_r2(const Matrix& x, const Labels& labels, SeparationIndex index) {
  return class_separation(x, labels, index).r2;
}

std::vector<double> sparsity_profile(const std::vector<Matrix>& activations) {
  if (activations.empty()) throw InvalidInput("sparsity_profile: no layers");
  std::vector<double> out;
  out.reserve(activations.size());
  for (const Matrix& a : activations) {
    if (a.size() == 0) throw InvalidInput("sparsity_profile: empty layer");
    out.push_back(static_cast<double>((a.array() > 0.0).count()) / static_cast<double>(a.size()));
  }
  return out;
}

Vector angular_visual_hardness(const FinalLayer& layer, const Matrix& features,
                               const Labels& labels) {
  check_labels(features, labels, "angular_visual_hardness");
  if (features.cols() != layer.feature_dim()) throw ShapeMismatch("angular_visual_hardness: feature width");
  Matrix w = normalize_rows(layer.weights, "angular_visual_hardness weights");
  Matrix u = normalize_rows(features, "angular_visual_hardness");
  Matrix sims = u * w.transpose();
  Vector out(features.rows());
  for (Eigen::Index i = 0; i < sims.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= layer.num_classes()) throw InvalidInput("angular_visual_hardness: label out of range");
    double denom = 0.0;
    for (Eigen::Index c = 0; c < sims.cols(); ++c) denom += std::acos(std::clamp(sims(i, c), -1.0, 1.0));
    const double num = std::acos(std::clamp(sims(i, y), -1.0, 1.0));
    out[i] = denom > 0.0 ? num / denom : 0.0;
  }
  return out;
}

Vector singular_spectrum(const Matrix& x, SpectrumMode mode, const Labels* labels) {
  if (x.size() == 0) throw InvalidInput("singular_spectrum: empty matrix");
  if (!x.allFinite()) throw InvalidInput("singular_spectrum: non-finite entries");
  Matrix m;
  switch (mode) {
    case SpectrumMode::kWeights:
      m = x;
      break;
    case SpectrumMode::kActivations:
      m = center_columns(x);
      break;
    case SpectrumMode::kClassCentroids: {
      if (!labels) throw InvalidInput("singular_spectrum: centroid mode needs labels");
      check_labels(x, *labels, "singular_spectrum");
      const int k = infer_num_classes(*labels);
      if (k < 2) throw InvalidInput("singular_spectrum: centroid mode needs at least 2 classes");
      Matrix sums = Matrix::Zero(k, x.cols());
      Vector counts = Vector::Zero(k);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        sums.row((*labels)[static_cast<std::size_t>(i)]) += x.row(i);
        counts[(*labels)[static_cast<std::size_t>(i)]] += 1.0;
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] == 0.0) throw InvalidInput("singular_spectrum: class " + std::to_string(c) + " is empty");
        sums.row(c) /= counts[c];
      }
      m = center_columns(sums);
      break;
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();  // already descending
}

PairwiseDistances pairwise_cosine_distances(const Matrix& x, const Labels& labels) {
  check_labels(x, labels, "pairwise_cosine_distances");
  Matrix u = normalize_rows(x, "pairwise_cosine_distances");
  PairwiseDistances out;
  for_each_pair(u, [&](Eigen::Index i, Eigen::Index j, double dist) {
    (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? out.within : out.between)
        .push_back(dist);
  });
  return out;
}

Vector kernel_density(const std::vector<double>& samples, double lo, double hi, double bandwidth,
                      int grid_points) {
  check_kde_args(lo, hi, bandwidth, grid_points);
  Binned bins = empty_bins(grid_points);
  const double step = (hi - lo) / (grid_points - 1);
  for (double s : samples) {
    if (!std::isfinite(s)) throw InvalidInput("kernel_density: non-finite sample");
    add_to_bins(bins, s, lo, step);
  }
  return smooth(bins, lo, hi, bandwidth);
}

DensityCurves cosine_distance_density(const Matrix& x, const Labels& labels, double bandwidth,
                                      int grid_points) {
  check_labels(x, labels, "cosine_distance_density");
  check_kde_args(0.0, 2.0, bandwidth, grid_points);
  if (x.rows() < 2) throw InvalidInput("cosine_distance_density: need at least 2 examples");
  Matrix u = normalize_rows(x, "cosine_distance_density");
  const double step = 2.0 / (grid_points - 1);
  Binned within = empty_bins(grid_points);
  Binned between = empty_bins(grid_points);
  for_each_pair(u, [&](Eigen::Index i, Eigen::Index j, double dist) {
    add_to_bins(labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? within : between,
                dist, 0.0, step);
  });
  DensityCurves out;
  out.grid = Vector::LinSpaced(grid_points, 0.0, 2.0);
  out.within = smooth(within, 0.0, 2.0, bandwidth);
  out.between = smooth(between, 0.0, 2.0, bandwidth);
  return out;
}

}  // namespace losslab
