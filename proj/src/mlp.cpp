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

#include "losslab/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace losslab {

int MlpModel::input_dim() const {
  return hidden.empty() ? output.feature_dim() : static_cast<int>(hidden.front().weights.cols());
}

void MlpModel::validate() const {
  Eigen::Index in = input_dim();
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const DenseLayer& l = hidden[i];
    if (l.weights.cols() != in || l.bias.size() != l.weights.rows()) {
      throw ShapeMismatch("hidden layer " + std::to_string(i) + " shape mismatch");
    }
    in = l.weights.rows();
  }
  if (output.weights.cols() != in) throw ShapeMismatch("output layer input width mismatch");
  validate_layer(output);
}

MlpModel init_mlp(int input_dim, const std::vector<int>& hidden_widths, int num_classes,
                  const LossSpec& spec, std::uint64_t seed) {
  if (input_dim <= 0 || num_classes <= 0) throw InvalidInput("init_mlp: dimensions must be positive");
  std::mt19937_64 rng(seed);
  MlpModel model;
  int in = input_dim;
  for (int width : hidden_widths) {
    if (width <= 0) throw InvalidInput("init_mlp: hidden widths must be positive");
    std::uniform_real_distribution<double> u(-std::sqrt(6.0 / in), std::sqrt(6.0 / in));
    DenseLayer layer{Matrix(width, in), Vector::Zero(width)};
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = u(rng);
    model.hidden.push_back(std::move(layer));
    in = width;
  }
  std::uniform_real_distribution<double> u(-1.0 / std::sqrt(in), 1.0 / std::sqrt(in));
  model.output.weights.resize(num_classes, in);
  for (Eigen::Index r = 0; r < model.output.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < model.output.weights.cols(); ++c) model.output.weights(r, c) = u(rng);
  model.output.bias = Vector::Constant(num_classes, is_sigmoid(spec) ? sigmoid_bias_init(num_classes) : 0.0);
  return model;
}

std::vector<Matrix> hidden_activations(const MlpModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim()) {
    throw ShapeMismatch("input width " + std::to_string(inputs.cols()) + " does not match model input " +
                        std::to_string(model.input_dim()));
  }
  std::vector<Matrix> acts;
  acts.reserve(model.hidden.size());
  const Matrix* prev = &inputs;
  for (const DenseLayer& l : model.hidden) {
    Matrix z = (*prev * l.weights.transpose()).rowwise() + l.bias.transpose();
    acts.push_back(z.cwiseMax(0.0));
    prev = &acts.back();
  }
  return acts;
}

Matrix penultimate_features(const MlpModel& model, const Matrix& inputs) {
  std::vector<Matrix> acts = hidden_activations(model, inputs);
  return acts.empty() ? inputs : std::move(acts.back());
}

Matrix forward_logits(const MlpModel& model, const Matrix& inputs) {
  Matrix x = penultimate_features(model, inputs);
  return (x * model.output.weights.transpose()).rowwise() + model.output.bias.transpose();
}

namespace {

template <class Model, class View>
std::vector<View> views_of(Model& model) {
  std::vector<View> out;
  auto add = [&](auto& m, bool decayed) { out.push_back(View{{m.data(), static_cast<std::size_t>(m.size())}, decayed}); };
  for (auto& l : model.hidden) {
    add(l.weights, true);
    add(l.bias, false);
  }
  add(model.output.weights, true);
  add(model.output.bias, false);
  return out;
}

constexpr char kModelMagic[8] = {'L', 'L', 'M', 'O', 'D', 'E', 'L', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64s(std::ostream& out, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], sizeof bits);
    write_u64(out, bits);
  }
}

class Reader {
 public:
  Reader(std::istream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  std::uint64_t u64() {
    unsigned char b[8];
    read(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw ParseError(path_.string() + ": truncated model file at byte " +
                           std::to_string(offset_ + in_.gcount()),
                       offset_ + static_cast<std::size_t>(in_.gcount()));
    }
    offset_ += n;
  }
  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::filesystem::path path_;
  std::size_t offset_ = 0;
};

Matrix read_matrix(Reader& r, std::uint64_t rows, std::uint64_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
  return m;
}

}  // namespace

std::vector<ParamView> param_views(MlpModel& model) { return views_of<MlpModel, ParamView>(model); }

std::vector<ConstParamView> param_views(const MlpModel& model) {
  return views_of<const MlpModel, ConstParamView>(model);
}

MlpModel zeros_like(const MlpModel& model) {
  MlpModel z = model;
  for (ParamView v : param_views(z)) std::fill(v.values.begin(), v.values.end(), 0.0);
  return z;
}

void save_model(const MlpModel& model, const std::string& loss_spec,
                const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kModelMagic, sizeof kModelMagic);
  write_u64(out, loss_spec.size());
  out.write(loss_spec.data(), static_cast<std::streamsize>(loss_spec.size()));
  write_u64(out, model.hidden.size() + 1);
  auto write_layer = [&](const Matrix& w, const Vector& b) {
    write_u64(out, static_cast<std::uint64_t>(w.rows()));
    write_u64(out, static_cast<std::uint64_t>(w.cols()));
    write_f64s(out, w.data(), static_cast<std::size_t>(w.size()));
    write_f64s(out, b.data(), static_cast<std::size_t>(b.size()));
  };
  for (const DenseLayer& l : model.hidden) write_layer(l.weights, l.bias);
  write_layer(model.output.weights, model.output.bias);
  if (!out) throw IoError("write failed for " + path.string());
}

MlpModel load_model(const std::filesystem::path& path, std::string* loss_spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Reader r(in, path);
  char magic[8];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
    throw ParseError(path.string() + ": not a model file (bad magic)", 0);
  }
  std::uint64_t spec_len = r.u64();
  if (spec_len > 4096) throw ParseError(path.string() + ": implausible loss spec length", 8);
  std::string spec(spec_len, '\0');
  r.read(spec.data(), spec_len);
  std::uint64_t layers = r.u64();
  if (layers == 0 || layers > 1024) {
    throw ParseError(path.string() + ": implausible layer count", r.offset() - 8);
  }
  MlpModel model;
  for (std::uint64_t i = 0; i < layers; ++i) {
    std::uint64_t rows = r.u64();
    std::uint64_t cols = r.u64();
    if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24)) {
      throw ParseError(path.string() + ": implausible layer shape", r.offset() - 16);
    }
    Matrix w = read_matrix(r, rows, cols);
    Vector b(static_cast<Eigen::Index>(rows));
    for (Eigen::Index k = 0; k < b.size(); ++k) b[k] = r.f64();
    if (i + 1 < layers) model.hidden.push_back({std::move(w), std::move(b)});
    else model.output = {std::move(w), std::move(b)};
  }
  model.validate();
  if (loss_spec) *loss_spec = std::move(spec);
  return model;
}

}  // namespace losslab
