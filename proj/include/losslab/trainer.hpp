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

#ifndef LOSSLAB_TRAINER_HPP_
#define LOSSLAB_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "losslab/data.hpp"
#include "losslab/losses.hpp"
#include "losslab/mlp.hpp"
#include "losslab/optim.hpp"

namespace losslab {

struct TrainConfig {
  LossSpec loss;
  int epochs = 50;
  int batch_size = 128;
  double peak_lr = 0.1;
  Schedule schedule = CosineNoRestart{};
  double nesterov_momentum = 0.9;
  // Product of learning rate and weight decay; see add_weight_decay_grad.
  double weight_decay_product = 0.0;
  std::optional<double> ema_momentum;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;  // learning rate of the epoch's last step
  double train_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> holdout_acc;
};

struct TrainResult {
  MlpModel model;
  std::optional<MlpModel> ema_model;
  std::vector<EpochRecord> log;
};

// Raised when the loss or a gradient becomes non-finite.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, std::int64_t step, std::string loss_kind)
      : Error(what), step_(step), loss_kind_(std::move(loss_kind)) {}
  std::int64_t step() const { return step_; }
  const std::string& loss_kind() const { return loss_kind_; }

 private:
  std::int64_t step_;
  std::string loss_kind_;
};

// Called after every epoch with the record just appended and the current
// weights.
using EpochCallback = std::function<void(const EpochRecord&, const MlpModel&)>;

// Minibatch SGD with Nesterov momentum. Each epoch reshuffles the data from
// the run seed; the last partial batch is kept. Dropout masks are drawn from
// seeds derived from the run seed and the step index, so the whole run is a
// function of (model, data, config). Weight decay applies to weight matrices
// only and is skipped on steps whose learning rate is zero.
TrainResult train(MlpModel model, const Batch& data, const TrainConfig& config,
                  const Batch* holdout = nullptr, const EpochCallback& callback = {});

// Mean loss and its gradient for every parameter, back-propagated through
// the hidden layers. Dropout seeds follow evaluate_batch.
struct ModelGradient {
  double value = 0.0;
  MlpModel grads;
};
ModelGradient model_gradient(const LossSpec& spec, const MlpModel& model, const Matrix& inputs,
                             const Labels& labels, std::uint64_t seed = 0);

// The loss used for evaluation: dropout keeps every unit.
LossSpec evaluation_spec(const LossSpec& spec);

Matrix model_logits(const LossSpec& spec, const MlpModel& model, const Matrix& inputs);
Labels predict(const LossSpec& spec, const MlpModel& model, const Matrix& inputs);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(const LossSpec& spec, const MlpModel& model, const Batch& data);

// 1-based epoch with the highest holdout accuracy, earliest on ties. Returns
// the last epoch if no holdout was recorded and 0 for an empty log.
int best_epoch(const std::vector<EpochRecord>& log);

// CSV with header epoch,lr,train_loss,train_acc,holdout_acc.
void write_log_csv(const std::vector<EpochRecord>& log, const std::filesystem::path& path);
std::vector<EpochRecord> read_log_csv(const std::filesystem::path& path);

}  // namespace losslab

#endif  // LOSSLAB_TRAINER_HPP_
