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

#include "losslab/experiment.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "losslab/activation_dump.hpp"
#include "losslab/calibration.hpp"
#include "losslab/mlp.hpp"
#include "text_util.hpp"

namespace losslab {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTransferDataSalt = 0x7472616e73666572ULL;
constexpr std::uint64_t kInitSalt = 0x696e6974ULL;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Batch load_source(const DatasetConfig& d) {
  switch (d.source) {
    case DatasetConfig::Source::kBlobs:
      return make_blobs(d.n_per_class, d.num_classes, d.feature_dim, d.spread, d.seed);
    case DatasetConfig::Source::kCsv:
      return load_dataset(d.path, DatasetFormat::kCsv, d.labels_path);
    case DatasetConfig::Source::kIdx:
      return load_dataset(d.path, DatasetFormat::kIdx, d.labels_path);
  }
  throw InvalidInput("unknown dataset source");
}

const MlpModel& eval_model(const TrainResult& r) { return r.ema_model ? *r.ema_model : r.model; }

}  // namespace

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  const DatasetConfig& d = config.dataset;
  ExperimentData data;
  Batch all = load_source(d);
  std::tie(data.train, data.eval) = stratified_split(all, d.eval_fraction, d.split_seed);

  if (config.analyses.transfer) {
    const TransferConfig& t = config.transfer;
    Batch extra = make_blobs(d.n_per_class, t.extra_classes, d.feature_dim, d.spread, mix_seed(d.seed, kTransferDataSalt));
    std::vector<int> mapping(static_cast<std::size_t>(t.extra_classes));
    const int group = t.extra_classes / t.coarse_classes;
    for (int c = 0; c < t.extra_classes; ++c) mapping[static_cast<std::size_t>(c)] = c / group;
    Batch coarse = relabel(extra, mapping);
    std::tie(data.transfer_train, data.transfer_test) = stratified_split(coarse, t.test_fraction, d.split_seed);
  }
  return data;
}

std::string run_dir_name(const RunKey& key) { return run_tag(key.run) + "__seed" + std::to_string(key.seed); }

std::vector<RunKey> plan_runs(const ExperimentConfig& config) {
  std::vector<RunKey> keys;
  for (const LossRun& run : config.losses)
    for (std::uint64_t s : config.seeds) keys.push_back({run, s});
  return keys;
}

void dump_run(const ExperimentConfig& config, const ExperimentData& data, const RunKey& key, const fs::path& run_dir) {
  std::string stored_spec;
  MlpModel model = load_model(run_dir / "model.bin", &stored_spec);
  const LossSpec spec = key.run.spec;
  if (stored_spec != to_string(spec)) {
    throw InvalidInput(run_dir.string() + ": model was trained with '" + stored_spec + "', expected '" +
                       to_string(spec) + "'");
  }

  std::vector<Matrix> hidden = hidden_activations(model, data.eval.features);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    write_activation_dump(run_dir / ("hidden" + std::to_string(i + 1) + ".dump"), hidden[i], &data.eval.labels);
  }
  const Matrix features = penultimate_features(model, data.eval.features);
  write_activation_dump(run_dir / "features.dump", features, &data.eval.labels);
  write_activation_dump(run_dir / "train_features.dump", penultimate_features(model, data.train.features),
                        &data.train.labels);

  const Matrix logits = model_logits(spec, model, data.eval.features);
  write_matrix_csv(logits, run_dir / "logits.csv");
  const ProbabilityBatch probs = probs_from_logits(logits, probability_source(spec));
  const Labels predicted = argmax_rows(logits);
  std::vector<double> confidence(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    confidence[i] = probs.probs(static_cast<Eigen::Index>(i), predicted[i]);
  }
  write_predictions_csv(run_dir / "predictions.csv", predicted, confidence);

  if (config.analyses.transfer && data.transfer_train && data.transfer_test) {
    write_activation_dump(run_dir / "transfer_train.dump", penultimate_features(model, data.transfer_train->features),
                          &data.transfer_train->labels);
    write_activation_dump(run_dir / "transfer_test.dump", penultimate_features(model, data.transfer_test->features),
                          &data.transfer_test->labels);
  }
}

RunOutcome run_single(const ExperimentConfig& config, const ExperimentData& data, const RunKey& key,
                      const fs::path& runs_dir) {
  RunOutcome outcome;
  outcome.key = key;
  outcome.dir = runs_dir / run_dir_name(key);
  fs::create_directories(outcome.dir);
  const TrainConfig tc = config.train_config(key.run, key.seed);
  MlpModel init = init_mlp(static_cast<int>(data.train.dim()), config.hidden, data.train.num_classes, tc.loss,
                           mix_seed(key.seed, kInitSalt));
  TrainResult result = train(std::move(init), data.train, tc, &data.eval);
  write_log_csv(result.log, outcome.dir / "log.csv");
  const MlpModel& model = eval_model(result);
  save_model(model, to_string(tc.loss), outcome.dir / "model.bin");

  outcome.train_accuracy = evaluate(tc.loss, model, data.train).accuracy;
  outcome.eval_accuracy = evaluate(tc.loss, model, data.eval).accuracy;
  nlohmann::json j;
  j["loss"] = to_string(key.run.spec);
  j["run"] = to_string(key.run);
  j["seed"] = key.seed;
  j["peak_lr"] = tc.peak_lr;
  j["weight_decay_product"] = tc.weight_decay_product;
  j["epochs"] = tc.epochs;
  j["train_accuracy"] = outcome.train_accuracy;
  j["eval_accuracy"] = outcome.eval_accuracy;
  j["ema"] = result.ema_model.has_value();
  write_text(outcome.dir / "run.json", j.dump(2) + "\n");

  dump_run(config, data, key, outcome.dir);
  return outcome;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs < 1) throw InvalidHyperparameter("jobs must be >= 1");
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
        next = count;
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<RunOutcome> run_experiment(const ExperimentConfig& config, const fs::path& out_dir, int jobs) {
  config.validate();
  const ExperimentData data = load_experiment_data(config);
  const fs::path runs_dir = out_dir / "runs";
  fs::create_directories(runs_dir);
  write_text(out_dir / "config.ini", to_ini(config));

  const std::vector<RunKey> keys = plan_runs(config);
  std::vector<RunOutcome> outcomes(keys.size());
  parallel_for(keys.size(), jobs, [&](std::size_t i) {
    try {
      outcomes[i] = run_single(config, data, keys[i], runs_dir);
    } catch (const std::exception& e) {
      outcomes[i].key = keys[i];
      outcomes[i].dir = runs_dir / run_dir_name(keys[i]);
      outcomes[i].error = e.what();
    }
  });

  std::string failures;
  for (const RunOutcome& o : outcomes) {
    if (o.error) failures += run_dir_name(o.key) + ": " + *o.error + "\n";
  }
  const fs::path failure_file = runs_dir / "failures.txt";
  if (failures.empty()) fs::remove(failure_file);
  else write_text(failure_file, failures);
  return outcomes;
}

std::vector<SweepChoice> run_sweep(const ExperimentConfig& config, const fs::path& out_dir, int jobs,
                                   std::vector<SweepPoint>* points_out) {
  config.validate();
  const ExperimentData data = load_experiment_data(config);
  auto [fit_part, holdout] = stratified_split(data.train, config.sweep.holdout_fraction, config.dataset.split_seed);

  std::vector<SweepPoint> points;
  for (const LossRun& base : config.losses)
    for (double lr : config.sweep.peak_lrs)
      for (double wd : config.sweep.weight_decay_products)
        for (std::uint64_t s : config.sweep.seeds) {
          LossRun r = base;
          r.peak_lr = lr;
          r.weight_decay_product = wd;
          SweepPoint p;
          p.run = r;
          p.seed = s;
          points.push_back(std::move(p));
        }

  parallel_for(points.size(), jobs, [&](std::size_t i) {
    SweepPoint& p = points[i];
    try {
      const TrainConfig tc = config.train_config(p.run, p.seed);
      MlpModel init = init_mlp(static_cast<int>(fit_part.dim()), config.hidden, fit_part.num_classes, tc.loss,
                               mix_seed(p.seed, kInitSalt));
      TrainResult result = train(std::move(init), fit_part, tc, &holdout);
      p.best_epoch = best_epoch(result.log);
      p.best_holdout_accuracy = *result.log[static_cast<std::size_t>(p.best_epoch - 1)].holdout_acc;
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  });

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "sweep.csv");
  if (!csv) throw IoError("cannot write " + (out_dir / "sweep.csv").string());
  csv << "loss,peak_lr,weight_decay_product,seed,best_epoch,best_holdout_acc,error\n";
  for (const SweepPoint& p : points) {
    csv << '"' << to_string(p.run.spec) << "\"," << internal::format_double(*p.run.peak_lr) << ','
        << internal::format_double(*p.run.weight_decay_product) << ',' << p.seed << ',' << p.best_epoch << ','
        << (p.error ? "" : internal::format_double(p.best_holdout_accuracy)) << ",\"" << (p.error ? *p.error : "")
        << "\"\n";
  }

  // Points of one grid cell are consecutive (seeds innermost).
  std::vector<SweepChoice> choices;
  const std::size_t n_seeds = config.sweep.seeds.size();
  const std::size_t cells_per_loss = config.sweep.peak_lrs.size() * config.sweep.weight_decay_products.size();
  for (std::size_t l = 0; l < config.losses.size(); ++l) {
    std::optional<SweepChoice> best;
    for (std::size_t c = 0; c < cells_per_loss; ++c) {
      const std::size_t start = (l * cells_per_loss + c) * n_seeds;
      double sum = 0.0;
      bool failed = false;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        failed |= points[start + s].error.has_value();
        sum += points[start + s].best_holdout_accuracy;
      }
      if (failed) continue;
      const double mean = sum / static_cast<double>(n_seeds);
      if (!best || mean > best->mean_holdout_accuracy) best = SweepChoice{points[start].run, mean};
    }
    if (best) choices.push_back(*best);
  }

  std::string text = "losses = ";
  for (std::size_t i = 0; i < choices.size(); ++i) text += (i ? "; " : "") + to_string(choices[i].run);
  text += "\n";
  for (const SweepChoice& c : choices) {
    text += "# " + to_string(c.run) + " mean holdout accuracy " + internal::format_double(c.mean_holdout_accuracy) + "\n";
  }
  write_text(out_dir / "sweep_best.txt", text);
  if (points_out) *points_out = std::move(points);
  return choices;
}

}  // namespace losslab
