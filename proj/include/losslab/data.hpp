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

#ifndef LOSSLAB_DATA_HPP_
#define LOSSLAB_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>

#include "losslab/common.hpp"

namespace losslab {

// A labelled design matrix: one example per row of `features`.
struct Batch {
  Matrix features;
  Labels labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
};

// Throws ShapeMismatch / InvalidInput if rows, labels and num_classes disagree.
void validate_batch(const Batch& batch);

// K isotropic Gaussian clusters. Class means are drawn from N(0, I) and
// points from N(mean, spread^2 I). Rows are grouped by class, class 0 first,
// with exactly n_per_class rows per class.
Batch make_blobs(int n_per_class, int num_classes, int feature_dim, double spread,
                 std::uint64_t seed);

enum class DatasetFormat { kCsv, kIdx };

// CSV: header-less, one example per line, label in the first column.
// IDX: `path` holds the feature tensor (first dimension = examples) and
// `labels_path` the matching rank-1 label tensor.
Batch load_dataset(const std::filesystem::path& path, DatasetFormat format,
                   const std::optional<std::filesystem::path>& labels_path = std::nullopt);

Batch load_csv_dataset(const std::filesystem::path& path);
Batch load_idx_dataset(const std::filesystem::path& features_path,
                       const std::filesystem::path& labels_path);

// Writes the CSV format read by load_csv_dataset, at full double precision.
void write_csv_dataset(const Batch& batch, const std::filesystem::path& path);

// Plain numeric matrix as header-less CSV, one row per line, written with
// shortest round-trip formatting.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

// Raw IDX tensor: dimensions plus values widened to double.
struct IdxTensor {
  std::uint8_t type_code = 0;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};
IdxTensor read_idx(const std::filesystem::path& path);

Batch subset(const Batch& batch, const std::vector<std::size_t>& rows);

// Seeded split that keeps class proportions: from each class,
// round(fraction * N_k) examples (at least one when N_k > 1) go to the
// second part. Row order inside each part follows the input order.
std::pair<Batch, Batch> stratified_split(const Batch& batch, double fraction,
                                         std::uint64_t seed);

// Relabels class c as mapping[c]; num_classes becomes max(mapping) + 1.
Batch relabel(const Batch& batch, const std::vector<int>& mapping);

}  // namespace losslab

#endif  // LOSSLAB_DATA_HPP_
