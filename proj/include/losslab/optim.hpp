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

#ifndef LOSSLAB_OPTIM_HPP_
#define LOSSLAB_OPTIM_HPP_

#include <cstdint>
#include <span>
#include <variant>

#include "losslab/mlp.hpp"

namespace losslab {

// Nesterov momentum with the look-ahead folded into the update:
//   v <- mu v - lr g
//   p <- p + mu v - lr g      (v already updated)
// With mu = 0 this is plain SGD.
void sgd_nesterov_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum);

// Weight decay parameterized by the product of learning rate and decay
// coefficient. Adds (decay_product / lr) * p to `grads`, i.e. the gradient of
// (decay_product / (2 lr)) ||p||^2, so one SGD step shrinks p by
// decay_product * p whatever the learning rate.
void add_weight_decay_grad(std::span<const double> params, std::span<double> grads,
                           double decay_product, double lr);

// Single-parameter form of the above, returning the contribution.
double weight_decay_grad(double param, double decay_product, double lr);

struct CosineNoRestart {};
struct WarmupThenExponential {
  double warmup_epochs = 10.0;
  double decay_per_epoch = 0.975;
};
using Schedule = std::variant<CosineNoRestart, WarmupThenExponential>;

// Learning rate at optimizer step `step` of `total_steps`.
//   cosine:  peak * (1 + cos(pi step / total)) / 2
//   warmup:  peak * step / warmup_steps during warmup, then
//            peak * decay^(epochs since warmup ended)
// `steps_per_epoch` converts the epoch-denominated warmup and decay.
double lr_at(const Schedule& schedule, double peak_lr, std::int64_t step,
             std::int64_t total_steps, std::int64_t steps_per_epoch = 1);

// Exponential moving average of model parameters.
struct EmaState {
  MlpModel shadow;
  double momentum = 0.9999;
};

EmaState make_ema(const MlpModel& model, double momentum);

// shadow <- m shadow + (1 - m) params
void ema_update(std::span<double> shadow, std::span<const double> params, double momentum);
void ema_update(EmaState& ema, const MlpModel& model);

}  // namespace losslab

#endif  // LOSSLAB_OPTIM_HPP_
