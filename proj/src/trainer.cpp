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

#include "losslab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "text_util.hpp"

namespace losslab {

namespace {

constexpr std::uint64_t kShuffleSalt = 0x5348554646ULL;
constexpr std::uint64_t kDropoutSalt = 0x44524f50ULL;

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx, std::size_t begin,
                   std::size_t end) {
  Matrix out(static_cast<Eigen::Index>(end - begin), x.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = x.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

bool all_finite(const MlpModel& m) {
  for (ConstParamView v : param_views(m)) {
    for (double d : v.values) {
      if (!std::isfinite(d)) return false;
    }
  }
  return true;
}

}  // namespace

void TrainConfig::validate() const {
  loss.validate();
  if (epochs < 0) throw InvalidHyperparameter("epochs must be >= 0");
  if (batch_size < 1) throw InvalidHyperparameter("batch_size must be >= 1");
  if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) throw InvalidHyperparameter("peak_lr must be positive");
  if (!(nesterov_momentum >= 0.0 && nesterov_momentum < 1.0)) {
    throw InvalidHyperparameter("nesterov_momentum must be in [0, 1)");
  }
  if (!(weight_decay_product >= 0.0)) throw InvalidHyperparameter("weight_decay_product must be >= 0");
  if (ema_momentum && !(*ema_momentum >= 0.0 && *ema_momentum < 1.0)) {
    throw InvalidHyperparameter("ema_momentum must be in [0, 1)");
  }
  if (const auto* w = std::get_if<WarmupThenExponential>(&schedule)) {
    if (!(w->warmup_epochs >= 0.0)) throw InvalidHyperparameter("warmup_epochs must be >= 0");
    if (!(w->decay_per_epoch > 0.0 && w->decay_per_epoch <= 1.0)) {
      throw InvalidHyperparameter("decay_per_epoch must be in (0, 1]");
    }
  }
}

LossSpec evaluation_spec(const LossSpec& spec) {
  LossSpec out = spec;
  if (std::holds_alternative<Dropout>(out.kind)) out.kind = Dropout{1.0};
  return out;
}

ModelGradient model_gradient(const LossSpec& spec, const MlpModel& model, const Matrix& inputs,
                             const Labels& labels, std::uint64_t seed) {
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw ShapeMismatch("model_gradient: rows and labels differ");
  }
  if (labels.empty()) throw InvalidInput("model_gradient: empty batch");
  std::vector<Matrix> acts = hidden_activations(model, inputs);
  const Matrix& feats = acts.empty() ? inputs : acts.back();
  BatchLossResult top = evaluate_batch(spec, model.output, feats, labels, seed);

  ModelGradient out{top.value, zeros_like(model)};
  out.grads.output.weights = top.grad_weights;
  out.grads.output.bias = top.grad_bias;
  Matrix delta = top.grad_features / static_cast<double>(labels.size());
  for (std::size_t l = model.hidden.size(); l-- > 0;) {
    const Matrix& a = acts[l];
    delta = delta.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    const Matrix& below = l == 0 ? inputs : acts[l - 1];
    out.grads.hidden[l].weights = delta.transpose() * below;
    out.grads.hidden[l].bias = delta.colwise().sum().transpose();
    if (l > 0) delta = delta * model.hidden[l].weights;
  }
  return out;
}

Matrix model_logits(const LossSpec& spec, const MlpModel& model, const Matrix& inputs) {
  return prediction_logits(spec, model.output, penultimate_features(model, inputs));
}

Labels predict(const LossSpec& spec, const MlpModel& model, const Matrix& inputs) {
  Matrix logits = model_logits(spec, model, inputs);
  Labels out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);  // first maximum on ties
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Evaluation evaluate(const LossSpec& spec, const MlpModel& model, const Batch& data) {
  validate_batch(data);
  if (data.size() == 0) throw InvalidInput("evaluate: empty dataset");
  LossSpec eval = evaluation_spec(spec);
  Matrix feats = penultimate_features(model, data.features);
  double total = 0.0;
  for (Eigen::Index i = 0; i < feats.rows(); ++i) {
    total += compose_loss(eval, model.output, feats.row(i).transpose(), data.labels[static_cast<std::size_t>(i)]).value;
  }
  Labels pred = predict(spec, model, data.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i];
  const double n = static_cast<double>(data.size());
  return {total / n, static_cast<double>(correct) / n};
}

TrainResult train(MlpModel model, const Batch& data, const TrainConfig& config,
                  const Batch* holdout, const EpochCallback& callback) {
  config.validate();
  validate_batch(data);
  model.validate();
  if (data.size() == 0) throw InvalidInput("train: empty dataset");
  if (static_cast<int>(data.dim()) != model.input_dim()) {
    throw ShapeMismatch("train: data width " + std::to_string(data.dim()) + " vs model input " +
                        std::to_string(model.input_dim()));
  }
  if (data.num_classes > model.num_classes()) throw ShapeMismatch("train: more classes than model outputs");

  TrainResult result;
  std::optional<EmaState> ema;
  if (config.ema_momentum) ema = make_ema(model, *config.ema_momentum);

  const std::size_t n = data.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  const std::int64_t steps_per_epoch = static_cast<std::int64_t>((n + bs - 1) / bs);
  const std::int64_t total_steps = steps_per_epoch * config.epochs;
  const std::string kind = kind_name(config.loss.kind);

  MlpModel velocity = zeros_like(model);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(config.seed, kShuffleSalt));
  const std::uint64_t dropout_seed = mix_seed(config.seed, kDropoutSalt);

  std::int64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double lr = 0.0;
    for (std::size_t begin = 0; begin < n; begin += bs, ++step) {
      const std::size_t end = std::min(n, begin + bs);
      Matrix xb = gather_rows(data.features, order, begin, end);
      Labels yb(end - begin);
      for (std::size_t i = begin; i < end; ++i) yb[i - begin] = data.labels[order[i]];

      lr = lr_at(config.schedule, config.peak_lr, step, total_steps, steps_per_epoch);
      ModelGradient g = model_gradient(config.loss, model, xb, yb, mix_seed(dropout_seed, static_cast<std::uint64_t>(step)));
      if (!std::isfinite(g.value) || !all_finite(g.grads)) {
        throw TrainingDiverged("non-finite loss at step " + std::to_string(step) + " (loss " + kind + ")",
                               step, kind);
      }
      auto params = param_views(model);
      auto grads = param_views(g.grads);
      auto vel = param_views(velocity);
      for (std::size_t t = 0; t < params.size(); ++t) {
        if (params[t].decayed && lr > 0.0) {
          add_weight_decay_grad(params[t].values, grads[t].values, config.weight_decay_product, lr);
        }
        sgd_nesterov_step(params[t].values, grads[t].values, vel[t].values, lr, config.nesterov_momentum);
      }
      if (ema) ema_update(*ema, model);
    }
    if (!all_finite(model)) {
      throw TrainingDiverged("non-finite parameters after epoch " + std::to_string(epoch) + " (loss " + kind + ")",
                             step, kind);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    Evaluation ev = evaluate(config.loss, model, data);
    rec.train_loss = ev.loss;
    rec.train_acc = ev.accuracy;
    if (!std::isfinite(rec.train_loss)) {
      throw TrainingDiverged("non-finite training loss after epoch " + std::to_string(epoch) + " (loss " + kind + ")",
                             step, kind);
    }
    if (holdout) rec.holdout_acc = evaluate(config.loss, ema ? ema->shadow : model, *holdout).accuracy;
    result.log.push_back(rec);
    if (callback) callback(result.log.back(), model);
  }
  result.model = std::move(model);
  if (ema) result.ema_model = std::move(ema->shadow);
  return result;
}

int best_epoch(const std::vector<EpochRecord>& log) {
  if (log.empty()) return 0;
  int best = log.back().epoch;
  double best_acc = -1.0;
  for (const EpochRecord& r : log) {
    if (r.holdout_acc && *r.holdout_acc > best_acc) {
      best_acc = *r.holdout_acc;
      best = r.epoch;
    }
  }
  return best;
}

void write_log_csv(const std::vector<EpochRecord>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,lr,train_loss,train_acc,holdout_acc\n";
  for (const EpochRecord& r : log) {
    out << r.epoch << ',' << internal::format_double(r.lr) << ',' << internal::format_double(r.train_loss)
        << ',' << internal::format_double(r.train_acc) << ','
        << (r.holdout_acc ? internal::format_double(*r.holdout_acc) : "") << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<EpochRecord> read_log_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || internal::trim(line) != "epoch,lr,train_loss,train_acc,holdout_acc") {
    throw ParseError(path.string() + ": missing log header", 1);
  }
  std::vector<EpochRecord> log;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::trim(line).empty()) continue;
    auto f = internal::split(line, ',');
    EpochRecord r;
    bool ok = f.size() == 5 && internal::parse_int(f[0], &r.epoch) &&
              internal::parse_double(f[1], &r.lr) && internal::parse_double(f[2], &r.train_loss) &&
              internal::parse_double(f[3], &r.train_acc);
    if (ok && !f[4].empty()) {
      double h;
      ok = internal::parse_double(f[4], &h);
      r.holdout_acc = h;
    }
    if (!ok) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed log row", line_no);
    log.push_back(r);
  }
  return log;
}

}  // namespace losslab
