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

#include "losslab/optim.hpp"

#include <cmath>
#include <numbers>

namespace losslab {

void sgd_nesterov_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ShapeMismatch("sgd_nesterov_step: params, grads and velocity differ in size");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidHyperparameter("momentum must be in [0, 1)");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double step = lr * grads[i];
    velocity[i] = momentum * velocity[i] - step;
    params[i] += momentum * velocity[i] - step;
  }
}

double weight_decay_grad(double param, double decay_product, double lr) {
  if (!(lr > 0.0)) throw InvalidHyperparameter("weight decay needs a positive learning rate");
  if (!(decay_product >= 0.0)) throw InvalidHyperparameter("weight decay product must be >= 0");
  return (decay_product / lr) * param;
}

void add_weight_decay_grad(std::span<const double> params, std::span<double> grads,
                           double decay_product, double lr) {
  if (params.size() != grads.size()) throw ShapeMismatch("weight decay: size mismatch");
  if (!(lr > 0.0)) throw InvalidHyperparameter("weight decay needs a positive learning rate");
  if (!(decay_product >= 0.0)) throw InvalidHyperparameter("weight decay product must be >= 0");
  if (decay_product == 0.0) return;
  const double c = decay_product / lr;
  for (std::size_t i = 0; i < params.size(); ++i) grads[i] += c * params[i];
}

double lr_at(const Schedule& schedule, double peak_lr, std::int64_t step,
             std::int64_t total_steps, std::int64_t steps_per_epoch) {
  if (step < 0 || total_steps < 0) throw InvalidInput("lr_at: negative step");
  if (step > total_steps) {
    throw InvalidInput("lr_at: step " + std::to_string(step) + " past total " +
                       std::to_string(total_steps));
  }
  if (steps_per_epoch < 1) throw InvalidInput("lr_at: steps_per_epoch must be >= 1");
  if (const auto* w = std::get_if<WarmupThenExponential>(&schedule)) {
    if (!(w->decay_per_epoch > 0.0 && w->decay_per_epoch <= 1.0)) {
      throw InvalidHyperparameter("decay_per_epoch must be in (0, 1]");
    }
    const double warmup_steps = w->warmup_epochs * static_cast<double>(steps_per_epoch);
    const double s = static_cast<double>(step);
    if (s < warmup_steps) return peak_lr * s / warmup_steps;
    const double epochs_after = (s - warmup_steps) / static_cast<double>(steps_per_epoch);
    return peak_lr * std::pow(w->decay_per_epoch, epochs_after);
  }
  if (total_steps == 0) return peak_lr;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

EmaState make_ema(const MlpModel& model, double momentum) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidHyperparameter("EMA momentum must be in [0, 1)");
  return EmaState{model, momentum};
}

void ema_update(std::span<double> shadow, std::span<const double> params, double momentum) {
  if (shadow.size() != params.size()) throw ShapeMismatch("ema_update: size mismatch");
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    shadow[i] = momentum * shadow[i] + (1.0 - momentum) * params[i];
  }
}

void ema_update(EmaState& ema, const MlpModel& model) {
  auto dst = param_views(ema.shadow);
  auto src = param_views(model);
  if (dst.size() != src.size()) throw ShapeMismatch("ema_update: model structure differs");
  for (std::size_t i = 0; i < dst.size(); ++i) ema_update(dst[i].values, src[i].values, ema.momentum);
}

}  // namespace losslab
