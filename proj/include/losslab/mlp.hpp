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

#ifndef LOSSLAB_MLP_HPP_
#define LOSSLAB_MLP_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "losslab/common.hpp"
#include "losslab/losses.hpp"

namespace losslab {

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
};

// Fully connected ReLU network. Every hidden layer is followed by a ReLU;
// the output layer is linear and feeds the loss.
struct MlpModel {
  std::vector<DenseLayer> hidden;
  FinalLayer output;

  int input_dim() const;
  int feature_dim() const { return output.feature_dim(); }
  int num_classes() const { return output.num_classes(); }

  // Throws ShapeMismatch when consecutive layer widths disagree.
  void validate() const;
};

// He-uniform hidden weights, zero hidden biases. The output layer draws
// U(-1/sqrt(M), 1/sqrt(M)) weights; its bias is zero, or -log K for the
// sigmoid loss.
MlpModel init_mlp(int input_dim, const std::vector<int>& hidden_widths, int num_classes,
                  const LossSpec& spec, std::uint64_t seed);

// Post-ReLU activations of the last hidden layer (the inputs themselves for a
// model without hidden layers). Rows are examples.
Matrix penultimate_features(const MlpModel& model, const Matrix& inputs);

// Post-ReLU activations of every hidden layer, first layer first.
std::vector<Matrix> hidden_activations(const MlpModel& model, const Matrix& inputs);

// W x + b on the penultimate features.
Matrix forward_logits(const MlpModel& model, const Matrix& inputs);

// One view per parameter tensor, in a fixed order: for each hidden layer
// weights then bias, then output weights and bias. `decayed` marks weight
// matrices; biases are not decayed.
struct ParamView {
  std::span<double> values;
  bool decayed;
};
struct ConstParamView {
  std::span<const double> values;
  bool decayed;
};
std::vector<ParamView> param_views(MlpModel& model);
std::vector<ConstParamView> param_views(const MlpModel& model);

// A model of the same shape with every parameter zero.
MlpModel zeros_like(const MlpModel& model);

// Binary model file: magic "LLMODEL1", layer count, per-layer shapes and
// little-endian f64 payloads. The loss spec text is stored alongside so the
// file is self-describing.
void save_model(const MlpModel& model, const std::string& loss_spec,
                const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path, std::string* loss_spec = nullptr);

}  // namespace losslab

#endif  // LOSSLAB_MLP_HPP_
