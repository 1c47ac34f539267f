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

// Classification objectives with analytic gradients.
//
// Every loss is written for a single example with logits l = W x + b, where
// x is the penultimate feature vector (length M), W is K x M and t is the
// target class index. Losses that only see the logits take a logit vector;
// losses that reach into the final layer (dropout on its inputs, cosine
// softmax, the extra weight penalty) take the layer and the features.

#ifndef LOSSLAB_LOSSES_HPP_
#define LOSSLAB_LOSSES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "losslab/common.hpp"

namespace losslab {

struct FinalLayer {
  Matrix weights;  // K x M
  Vector bias;     // K

  int num_classes() const { return static_cast<int>(weights.rows()); }
  int feature_dim() const { return static_cast<int>(weights.cols()); }
  Vector logits(const Vector& features) const { return weights * features + bias; }
};

// Throws ShapeMismatch or InvalidInput if shapes disagree or entries are not
// finite.
void validate_layer(const FinalLayer& layer);

struct LossResult {
  double value = 0.0;
  Vector grad_logits;
  std::optional<Matrix> grad_weights;
  std::optional<Vector> grad_bias;
  std::optional<Vector> grad_features;
};

// ---- Loss kinds -------------------------------------------------------------

struct Softmax {};
struct LabelSmoothing {
  double alpha = 0.1;
};
struct Dropout {
  double keep_prob = 0.7;
};
// Softmax cross-entropy plus (lambda/2) ||W||_F^2 on the final layer.
struct ExtraFinalL2 {
  double lambda = 8e-4;
};
struct LogitPenalty {
  double beta = 6e-4;
};
struct LogitNorm {
  double temperature = 0.04;
};
struct CosineSoftmax {
  double temperature = 0.05;
};
struct Sigmoid {};
struct SquaredError {
  double kappa = 1.0;
  double target_magnitude = 1.0;
  double loss_scale = 1.0;
};

using LossKind = std::variant<Softmax, LabelSmoothing, Dropout, ExtraFinalL2, LogitPenalty,
                              LogitNorm, CosineSoftmax, Sigmoid, SquaredError>;
using Penalty = std::variant<LogitPenalty, ExtraFinalL2>;

struct LossSpec {
  LossKind kind = Softmax{};
  std::vector<Penalty> extra_penalties;

  // Throws InvalidHyperparameter when a hyperparameter is out of range.
  void validate() const;
};

// Text form used by configs and run directory names, e.g.
//   softmax
//   label_smoothing(alpha=0.1)
//   cosine_softmax(tau=0.05)+logit_penalty(beta=0.0006)
//   squared_error(kappa=9,M=60,scale=10)
LossSpec parse_loss_spec(std::string_view text);
std::string to_string(const LossSpec& spec);
std::string kind_name(const LossKind& kind);

// True for the sigmoid loss, whose outputs are per-class probabilities
// rather than a distribution.
bool is_sigmoid(const LossSpec& spec);

// ---- Single-example losses --------------------------------------------------

// Numerically stable log(sum(exp(l))).
double logsumexp(const Vector& logits);
// Numerically stable log(1 + exp(x)).
double softplus(double x);
Vector softmax(const Vector& logits);

LossResult softmax_xent(const Vector& logits, int target);

// Label smoothing rescaled by 1/(1 - alpha) so the gradient on the positive
// logit keeps the softmax scale.
LossResult label_smoothing_xent(const Vector& logits, int target, double alpha);

// Dropout on the final layer's inputs, averaged over n_samples Bernoulli
// masks drawn from `seed`. Gradients differentiate through the sampled masks.
LossResult dropout_xent(const FinalLayer& layer, const Vector& features, int target,
                        double keep_prob, int n_samples, std::uint64_t seed);

// (lambda/2) ||W||_F^2. The bias is not penalized.
LossResult extra_final_l2_penalty(const FinalLayer& layer, double lambda);

LossResult logit_penalty_xent(const Vector& logits, int target, double beta);

// Softmax cross-entropy on l / (tau ||l||).
LossResult logit_norm_xent(const Vector& logits, int target, double temperature);

// Softmax cross-entropy on cos(W_k, x) / tau + b_k. A zero x has cosine 0
// with every row and a zero feature gradient; a zero row W_k throws.
LossResult cosine_softmax_xent(const FinalLayer& layer, const Vector& features, int target,
                               double temperature);

// One-vs-rest sigmoid cross-entropy, -l_t + sum_k softplus(l_k).
LossResult sigmoid_xent(const Vector& logits, int target);

// loss_scale / K * (kappa (l_t - M)^2 + sum_{k != t} l_k^2).
LossResult squared_error(const Vector& logits, int target, double kappa,
                         double target_magnitude, double loss_scale);

// Bias initialization for the sigmoid loss: -log K, giving initial
// per-class probabilities of roughly 1/K.
double sigmoid_bias_init(int num_classes);

// ---- Composition ------------------------------------------------------------

// Base loss plus every extra penalty. Unlike the single-example functions,
// the result always carries total gradients with respect to the layer
// weights, bias and features (all four fields are set), so callers can
// back-propagate without knowing which loss produced them. grad_logits is the
// gradient with respect to the logits the loss acted on: W x + b for most
// kinds, the cosine logits for CosineSoftmax, the un-normalized logits for
// LogitNorm, and the mean over dropout masks for Dropout.
// `seed` only matters for Dropout, which draws a single mask.
LossResult compose_loss(const LossSpec& spec, const FinalLayer& layer, const Vector& features,
                        int target, std::uint64_t seed = 0);

// Logits used for prediction under `spec`: cosine logits for CosineSoftmax,
// normalized logits for LogitNorm, W x + b otherwise (dropout keeps every
// unit at evaluation time). Rows of `features` are examples.
Matrix prediction_logits(const LossSpec& spec, const FinalLayer& layer, const Matrix& features);

struct BatchLossResult {
  double value = 0.0;       // mean over examples
  Matrix grad_weights;      // gradient of the mean
  Vector grad_bias;         // gradient of the mean
  Matrix grad_features;     // row i: gradient of example i's own loss w.r.t. x_i
};

// Mean of compose_loss over rows. Example i uses dropout seed
// mix_seed(seed, i), so the result equals the mean of per-example
// compose_loss calls with those seeds.
BatchLossResult evaluate_batch(const LossSpec& spec, const FinalLayer& layer,
                               const Matrix& features, const Labels& labels,
                               std::uint64_t seed = 0);

}  // namespace losslab

#endif  // LOSSLAB_LOSSES_HPP_
