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

#include "losslab/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "text_util.hpp"

namespace losslab {

using internal::parse_double;
using internal::trim;

int infer_num_classes(const Labels& labels) {
  if (labels.empty()) throw InvalidInput("empty label vector");
  int max_label = -1;
  for (int y : labels) {
    if (y < 0) throw InvalidInput("negative class label " + std::to_string(y));
    max_label = std::max(max_label, y);
  }
  return max_label + 1;
}

void validate_batch(const Batch& batch) {
  if (static_cast<std::size_t>(batch.features.rows()) != batch.labels.size()) {
    throw ShapeMismatch("batch has " + std::to_string(batch.features.rows()) +
                        " rows but " + std::to_string(batch.labels.size()) + " labels");
  }
  for (int y : batch.labels) {
    if (y < 0 || y >= batch.num_classes) {
      throw InvalidInput("label " + std::to_string(y) + " outside [0, " +
                         std::to_string(batch.num_classes) + ")");
    }
  }
}

Batch make_blobs(int n_per_class, int num_classes, int feature_dim, double spread,
                 std::uint64_t seed) {
  if (n_per_class <= 0 || num_classes <= 0 || feature_dim <= 0) {
    throw InvalidInput("make_blobs: counts must be positive");
  }
  if (!(spread >= 0.0)) throw InvalidInput("make_blobs: spread must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix means(num_classes, feature_dim);
  for (int k = 0; k < num_classes; ++k)
    for (int j = 0; j < feature_dim; ++j) means(k, j) = normal(rng);

  Batch out;
  out.num_classes = num_classes;
  out.features.resize(static_cast<Eigen::Index>(n_per_class) * num_classes, feature_dim);
  out.labels.reserve(out.features.rows());
  Eigen::Index row = 0;
  for (int k = 0; k < num_classes; ++k) {
    for (int i = 0; i < n_per_class; ++i, ++row) {
      for (int j = 0; j < feature_dim; ++j) {
        out.features(row, j) = means(k, j) + spread * normal(rng);
      }
      out.labels.push_back(k);
    }
  }
  return out;
}

Batch load_csv_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  Labels labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::vector<double> values;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = view.find(',', start);
      std::string_view field = trim(view.substr(start, comma == std::string_view::npos
                                                           ? std::string_view::npos
                                                           : comma - start));
      double v = 0.0;
      if (!parse_double(field, &v) || !std::isfinite(v)) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": bad numeric field '" + std::string(field) + "'",
                         line_no);
      }
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (values.size() < 2) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": expected a label and at least one feature",
                       line_no);
    }
    double label = values.front();
    if (label < 0 || label != std::floor(label)) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": label must be a non-negative integer",
                       line_no);
    }
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(width) + " fields, got " +
                           std::to_string(values.size()),
                       line_no);
    }
    labels.push_back(static_cast<int>(label));
    values.erase(values.begin());
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows", line_no);

  Batch out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j + 1 < width; ++j) out.features(i, j) = rows[i][j];
  out.labels = std::move(labels);
  out.num_classes = infer_num_classes(out.labels);
  return out;
}

void write_csv_dataset(const Batch& batch, const std::filesystem::path& path) {
  validate_batch(batch);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < batch.features.rows(); ++i) {
    out << batch.labels[i];
    for (Eigen::Index j = 0; j < batch.features.cols(); ++j) out << ',' << batch.features(i, j);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << internal::format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> values;
    for (std::string_view field : internal::split(trim(line), ',')) {
      double v = 0.0;
      if (!parse_double(field, &v)) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad numeric field '" +
                             std::string(field) + "'",
                         line_no);
      }
      values.push_back(v);
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": ragged row", line_no);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows", line_no);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

namespace {

std::size_t idx_element_size(std::uint8_t type_code) {
  switch (type_code) {
    case 0x08:
    case 0x09:
      return 1;
    case 0x0B:
      return 2;
    case 0x0C:
    case 0x0D:
      return 4;
    case 0x0E:
      return 8;
    default:
      return 0;
  }
}

std::uint64_t read_be(const unsigned char* p, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v = (v << 8) | p[i];
  return v;
}

double decode_idx(std::uint8_t type_code, const unsigned char* p) {
  switch (type_code) {
    case 0x08:
      return static_cast<double>(p[0]);
    case 0x09:
      return static_cast<double>(static_cast<std::int8_t>(p[0]));
    case 0x0B:
      return static_cast<double>(static_cast<std::int16_t>(read_be(p, 2)));
    case 0x0C:
      return static_cast<double>(static_cast<std::int32_t>(read_be(p, 4)));
    case 0x0D: {
      std::uint32_t bits = static_cast<std::uint32_t>(read_be(p, 4));
      float f;
      std::memcpy(&f, &bits, sizeof f);
      return f;
    }
    default: {
      std::uint64_t bits = read_be(p, 8);
      double d;
      std::memcpy(&d, &bits, sizeof d);
      return d;
    }
  }
}

}  // namespace

IdxTensor read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 4) throw ParseError(path.string() + ": truncated IDX magic", bytes.size());
  if (bytes[0] != 0 || bytes[1] != 0) {
    throw ParseError(path.string() + ": IDX magic must start with two zero bytes", 0);
  }
  IdxTensor t;
  t.type_code = bytes[2];
  std::size_t elem = idx_element_size(t.type_code);
  if (elem == 0) throw ParseError(path.string() + ": unknown IDX type code", 2);
  std::size_t rank = bytes[3];
  if (rank == 0) throw ParseError(path.string() + ": IDX rank must be positive", 3);
  std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) {
    throw ParseError(path.string() + ": truncated IDX dimension header", bytes.size());
  }
  std::size_t count = 1;
  for (std::size_t r = 0; r < rank; ++r) {
    auto d = static_cast<std::uint32_t>(read_be(&bytes[4 + 4 * r], 4));
    t.dims.push_back(d);
    count *= d;
  }
  std::size_t expected = header + count * elem;
  if (bytes.size() != expected) {
    throw ParseError(path.string() + ": IDX payload size mismatch (expected " +
                         std::to_string(expected) + " bytes, file has " +
                         std::to_string(bytes.size()) + ")",
                     std::min(bytes.size(), expected));
  }
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) t.values[i] = decode_idx(t.type_code, &bytes[header + i * elem]);
  return t;
}

Batch load_idx_dataset(const std::filesystem::path& features_path,
                       const std::filesystem::path& labels_path) {
  IdxTensor x = read_idx(features_path);
  IdxTensor y = read_idx(labels_path);
  if (y.dims.size() != 1) throw ParseError(labels_path.string() + ": labels must be rank 1", 3);
  if (x.dims.front() != y.dims.front()) {
    throw ShapeMismatch("IDX feature/label counts differ: " + std::to_string(x.dims.front()) +
                        " vs " + std::to_string(y.dims.front()));
  }
  std::size_t n = x.dims.front();
  std::size_t d = n == 0 ? 0 : x.values.size() / n;
  Batch out;
  out.features = Eigen::Map<const Matrix>(x.values.data(), static_cast<Eigen::Index>(n),
                                          static_cast<Eigen::Index>(d));
  out.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = y.values[i];
    if (v < 0 || v != std::floor(v)) {
      throw ParseError(labels_path.string() + ": non-integer label",
                       8 + i * idx_element_size(y.type_code));
    }
    out.labels.push_back(static_cast<int>(v));
  }
  out.num_classes = infer_num_classes(out.labels);
  return out;
}

Batch load_dataset(const std::filesystem::path& path, DatasetFormat format,
                   const std::optional<std::filesystem::path>& labels_path) {
  switch (format) {
    case DatasetFormat::kCsv:
      return load_csv_dataset(path);
    case DatasetFormat::kIdx:
      if (!labels_path) throw InvalidInput("IDX datasets need a labels file");
      return load_idx_dataset(path, *labels_path);
  }
  throw InvalidInput("unknown dataset format");
}

Batch subset(const Batch& batch, const std::vector<std::size_t>& rows) {
  Batch out;
  out.num_classes = batch.num_classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), batch.features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = batch.features.row(rows[i]);
    out.labels.push_back(batch.labels[rows[i]]);
  }
  return out;
}

std::pair<Batch, Batch> stratified_split(const Batch& batch, double fraction,
                                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidHyperparameter("split fraction must lie in (0, 1)");
  }
  validate_batch(batch);
  std::vector<std::vector<std::size_t>> by_class(batch.num_classes);
  for (std::size_t i = 0; i < batch.size(); ++i) by_class[batch.labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<char> second(batch.size(), 0);
  for (auto& members : by_class) {
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    auto take = static_cast<std::size_t>(std::llround(fraction * members.size()));
    if (members.size() > 1) take = std::clamp<std::size_t>(take, 1, members.size() - 1);
    else take = 0;
    for (std::size_t i = 0; i < take; ++i) second[members[i]] = 1;
  }
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < batch.size(); ++i) (second[i] ? b : a).push_back(i);
  return {subset(batch, a), subset(batch, b)};
}

Batch relabel(const Batch& batch, const std::vector<int>& mapping) {
  if (mapping.size() < static_cast<std::size_t>(batch.num_classes)) {
    throw InvalidInput("relabel mapping shorter than class count");
  }
  Batch out = batch;
  for (int& y : out.labels) y = mapping[y];
  out.num_classes = infer_num_classes(mapping);
  return out;
}

}  // namespace losslab
