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

// Representation metrics: CKA, class separation, sparsity, angular visual
// hardness, singular spectra and cosine-distance densities. Rows of every
// matrix are examples.

#ifndef LOSSLAB_REPR_HPP_
#define LOSSLAB_REPR_HPP_

#include <vector>

#include "losslab/common.hpp"
#include "losslab/losses.hpp"

namespace losslab {

// Linear CKA in feature space:
//   ||Yc^T Xc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F)
// with column-centered Xc, Yc. Throws DegenerateInput for a constant
// representation.
double linear_cka(const Matrix& x, const Matrix& y);

enum class SeparationIndex { kCosine, kCosineMeanSubtracted, kEuclidean };

struct SeparationStats {
  double within = 0.0;  // class-weighted mean within-class distance
  double total = 0.0;   // class-weighted mean distance over all pairs
  double r2 = 0.0;      // 1 - within / total
};

// Class separation with every class weighted equally. Self-pairs are part of
// both sums. Distances: 1 - cosine similarity; the same after subtracting
// the mean row; squared Euclidean. Runs in O(n d) from per-class sums.
// Classes are 0..max(label); each must be present.
SeparationStats class_separation(const Matrix& x, const Labels& labels, SeparationIndex index);
double class_separation_r2(const Matrix& x, const Labels& labels, SeparationIndex index);

// Fraction of entries strictly greater than zero, one value per matrix.
std::vector<double> sparsity_profile(const std::vector<Matrix>& activations);

// arccos(sim(W_y, x)) / sum_k arccos(sim(W_k, x)) per example.
Vector angular_visual_hardness(const FinalLayer& layer, const Matrix& features,
                               const Labels& labels);

enum class SpectrumMode {
  kActivations,     // rows are examples; centered
  kWeights,         // a weight matrix as given
  kClassCentroids,  // per-class mean rows, centered; needs labels
};

// Singular values, descending.
Vector singular_spectrum(const Matrix& x, SpectrumMode mode, const Labels* labels = nullptr);

struct PairwiseDistances {
  std::vector<double> within;
  std::vector<double> between;
};

// Cosine distances 1 - sim over unordered pairs i < j, split by whether the
// two labels agree. Pairs are listed in (i, j) lexicographic order.
PairwiseDistances pairwise_cosine_distances(const Matrix& x, const Labels& labels);

struct DensityCurves {
  Vector grid;  // uniform on [0, 2]
  Vector within;
  Vector between;
};

// Gaussian kernel density estimates of the within- and between-class cosine
// distances (self-pairs excluded) on `grid_points` uniform points over
// [0, 2]. Distances are linearly binned onto the grid before smoothing, and
// the kernel is reflected at both ends so each curve integrates to one over
// the interval. A curve with no pairs is all zeros.
DensityCurves cosine_distance_density(const Matrix& x, const Labels& labels, double bandwidth,
                                      int grid_points = 512);

// Gaussian KDE of arbitrary samples on a uniform grid over [lo, hi], with
// the same binning and reflection.
Vector kernel_density(const std::vector<double>& samples, double lo, double hi, double bandwidth,
                      int grid_points);

}  // namespace losslab

#endif  // LOSSLAB_REPR_HPP_
