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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance <work_dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "loss_fd.hpp"
#include "losslab/activation_dump.hpp"
#include "losslab/calibration.hpp"
#include "losslab/config.hpp"
#include "losslab/data.hpp"
#include "losslab/experiment.hpp"
#include "losslab/losses.hpp"
#include "losslab/mlp.hpp"
#include "losslab/probe.hpp"
#include "losslab/report.hpp"
#include "losslab/repr.hpp"
#include "losslab/trainer.hpp"
#include "oracles.hpp"

namespace losslab {
namespace {

namespace fs = std::filesystem;

// Reference values from the paper, used only for their ordering.
// Penultimate-layer class separation (R^2) per loss.
const std::map<std::string, double> kPaperSeparation = {
    {"softmax", 0.3494},
    {"label_smoothing", 0.4197},
    {"cosine_softmax", 0.6406},
    {"squared_error", 0.8452},
};
// Cosine softmax temperature sweep: R^2 and Food transfer accuracy.
const std::vector<double> kPaperTemperatures = {0.01, 0.03, 0.05, 0.08};
const std::vector<double> kPaperTemperatureR2 = {0.236, 0.475, 0.634, 0.770};
const std::vector<double> kPaperTemperatureFood = {73.4, 69.1, 62.8, 53.7};
// The temperature runs in blobs.ini, learning rate proportional to tau.
const std::vector<const char*> kTemperatureRuns = {
    "cosine_softmax(tau=0.01)@lr=0.04", "cosine_softmax(tau=0.03)@lr=0.12", "cosine_softmax(tau=0.05)@lr=0.2",
    "cosine_softmax(tau=0.08)@lr=0.32"};

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double pooled_stderr(const MeanStderr& a, const MeanStderr& b) {
  return std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
}

const std::vector<const char*> kGradientLosses = {
    "softmax",
    "label_smoothing(alpha=0.1)",
    "dropout(rho=0.7)",
    "extra_l2(lambda=0.0008)",
    "logit_penalty(beta=0.0006)",
    "logit_norm(tau=0.04)",
    "cosine_softmax(tau=0.05)",
    "sigmoid",
    "squared_error(kappa=9,M=60,scale=10)",
    "label_smoothing(alpha=0.1)+logit_penalty(beta=0.0001)",
    "cosine_softmax(tau=0.05)+logit_penalty(beta=0.0006)",
    "sigmoid+extra_l2(lambda=0.0008)+logit_penalty(beta=0.0002)",
};

// ---- 1 ----------------------------------------------------------------------

Verdict gradient_suite() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> classes(2, 10), width(4, 12);
  double worst = 0.0;
  std::string worst_loss;
  for (const char* text : kGradientLosses) {
    const LossSpec spec = parse_loss_spec(text);
    for (int i = 0; i < 100; ++i) {
      const Instance in = random_instance(rng, classes(rng), width(rng));
      const double err = gradient_error(spec, in, mix_seed(7, static_cast<std::uint64_t>(i)));
      if (err > worst) {
        worst = err;
        worst_loss = text;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.detail << kGradientLosses.size() << " losses x 100 instances, max rel err " << fmt(worst, 3) << " (" << worst_loss
           << "), " << fmt(secs, 3) << " s";
  v.check(worst < 1e-6, "max rel err < 1e-6");
  v.check(secs < 30.0, "runtime < 30 s");
  return v;
}

// ---- 2 ----------------------------------------------------------------------

Verdict reductions() {
  Verdict v;
  std::mt19937_64 rng(2002);
  const LossSpec softmax = parse_loss_spec("softmax");
  double worst = 0.0;
  for (const char* text : {"label_smoothing(alpha=0)", "dropout(rho=1)", "logit_penalty(beta=0)", "extra_l2(lambda=0)"}) {
    const LossSpec spec = parse_loss_spec(text);
    double local = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Instance in = random_instance(rng, 2 + i % 9, 1 + i % 11);
      const LossResult a = compose_loss(spec, in.layer, in.x, in.target, static_cast<std::uint64_t>(i));
      const LossResult b = compose_loss(softmax, in.layer, in.x, in.target);
      local = std::max(local, std::abs(a.value - b.value));
      local = std::max(local, (*a.grad_weights - *b.grad_weights).cwiseAbs().maxCoeff());
      local = std::max(local, (*a.grad_bias - *b.grad_bias).cwiseAbs().maxCoeff());
      local = std::max(local, (*a.grad_features - *b.grad_features).cwiseAbs().maxCoeff());
    }
    v.detail << text << " " << fmt(local, 2) << "; ";
    worst = std::max(worst, local);
  }
  v.detail << "1000 instances each, max abs diff " << fmt(worst, 2);
  v.check(worst <= 1e-12, "within 1e-12");
  return v;
}

// ---- 3 ----------------------------------------------------------------------

Verdict metric_oracles() {
  Verdict v;
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<int> rows(4, 60), cols(1, 12), nclass(2, 6);
  double cka = 0.0, r2 = 0.0, avh = 0.0, ece_err = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = rows(rng);
    const Matrix x = oracle::random_matrix(rng, n, cols(rng));
    const Matrix y = (oracle::random_matrix(rng, n, cols(rng)).array() + 0.5).matrix();
    cka = std::max(cka, std::abs(linear_cka(x, y) - oracle::gram_cka(x, y)));

    const int k = nclass(rng);
    Labels labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % k;
    std::shuffle(labels.begin(), labels.end(), rng);
    const Matrix e = oracle::random_matrix(rng, n, 5) + Matrix::Constant(n, 5, 0.3);
    for (auto [index, dist] : {std::pair{SeparationIndex::kCosine, oracle::Distance::kCosine},
                               std::pair{SeparationIndex::kCosineMeanSubtracted, oracle::Distance::kCosineMeanSubtracted},
                               std::pair{SeparationIndex::kEuclidean, oracle::Distance::kEuclidean}}) {
      if (n < 2 * k) continue;
      r2 = std::max(r2, std::abs(class_separation_r2(e, labels, index) - oracle::r2_double_loop(e, labels, dist)));
    }

    const FinalLayer layer{oracle::random_matrix(rng, k, 5), oracle::random_vector(rng, k)};
    avh = std::max(avh, (angular_visual_hardness(layer, e, labels) - oracle::avh_loop(layer.weights, e, labels))
                            .cwiseAbs()
                            .maxCoeff());

    const Matrix logits = oracle::random_matrix(rng, n, k, 3.0);
    const ProbabilityBatch p = probs_from_logits(logits, ProbabilitySource::kSoftmax);
    for (int bins : {1, 10, 15})
      ece_err = std::max(ece_err, std::abs(ece(p, labels, bins).ece - oracle::brute_force_ece(p.probs, labels, bins)));
  }

  // Cosine R^2 against linear CKA between the normalized embeddings and the
  // one-hot labels, on balanced data.
  double equiv = 0.0, trace_form = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int k = nclass(rng);
    const int per = std::uniform_int_distribution<int>(2, 60 / k)(rng);
    const Labels labels = oracle::balanced_labels(rng, per, k);
    const int n = per * k;
    Matrix e = oracle::random_matrix(rng, n, 6);
    for (int i = 0; i < n; ++i) e(i, labels[static_cast<std::size_t>(i)]) += 1.0;
    const double r = class_separation_r2(e, labels, SeparationIndex::kCosine);
    equiv = std::max(equiv, std::abs(r - oracle::cosine_cka_with_labels(e, labels)));
    Matrix xn = e;
    for (Eigen::Index i = 0; i < n; ++i) xn.row(i).normalize();
    const Matrix h = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
    const Matrix kc = h * xn * xn.transpose() * h;
    double aligned = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) aligned += kc(i, j);
    trace_form = std::max(trace_form, std::abs(r - k * aligned / (n * kc.trace())));
  }

  v.detail << "cka " << fmt(cka, 2) << ", r2 " << fmt(r2, 2) << ", avh " << fmt(avh, 2) << ", ece " << fmt(ece_err, 2)
           << "; cka-with-labels vs r2 " << fmt(equiv, 3) << " (trace-normalized alignment vs r2 "
           << fmt(trace_form, 2) << ")";
  v.check(cka <= 1e-10 && r2 <= 1e-10 && avh <= 1e-10 && ece_err <= 1e-10, "oracles within 1e-10");
  v.check(equiv <= 1e-8, "cka/r2 one-hot equivalence within 1e-8");
  return v;
}

// ---- 4 ----------------------------------------------------------------------

Verdict calibration_contracts() {
  Verdict v;
  std::mt19937_64 rng(4004);
  int batches = 0, top1_changed = 0, nll_rose = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = std::uniform_int_distribution<int>(5, 300)(rng);
    const int k = std::uniform_int_distribution<int>(2, 10)(rng);
    const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 1.3)(rng));
    const Matrix logits = oracle::random_matrix(rng, n, k, scale);
    Labels labels(static_cast<std::size_t>(n));
    const Labels argmax = argmax_rows(logits);
    for (int i = 0; i < n; ++i)
      labels[static_cast<std::size_t>(i)] = std::bernoulli_distribution(0.6)(rng)
                                                ? argmax[static_cast<std::size_t>(i)]
                                                : std::uniform_int_distribution<int>(0, k - 1)(rng);
    const auto source = t % 2 ? ProbabilitySource::kSigmoidNormalized : ProbabilitySource::kSoftmax;
    const TemperatureFit fit = fit_temperature(logits, labels, source);
    if (probs_from_logits(logits / fit.temperature, source).predicted != argmax_rows(logits)) ++top1_changed;
    if (fit.after.accuracy != fit.before.accuracy) ++top1_changed;
    if (!(fit.after.nll <= fit.before.nll)) ++nll_rose;
    ++batches;
  }

  // Confidences 0.75 (right), 0.75 (wrong), 0.5 (right), 0.25 (wrong):
  // ECE = 2/4 |0.5 - 0.75| + 1/4 |1 - 0.5| + 1/4 |0 - 0.25| = 0.3125.
  Matrix p(4, 4);
  p << 0.75, 0.25, 0, 0,     //
      0.75, 0.25, 0, 0,      //
      0.25, 0.5, 0.25, 0,    //
      0.25, 0.25, 0.25, 0.25;
  const double hand = ece({p, ProbabilitySource::kSoftmax}, {0, 1, 1, 3}, 15).ece;

  v.detail << batches << " batches: top-1 changed " << top1_changed << ", nll increased " << nll_rose
           << "; 4-example ece " << fmt(hand, 17) << " (expected 0.3125)";
  v.check(top1_changed == 0, "top-1 unchanged");
  v.check(nll_rose == 0, "nll non-increasing");
  v.check(hand == 0.3125, "hand-computed ece exact");
  return v;
}

// ---- 5, 6, 8: the blobs experiment ------------------------------------------

struct BlobsResults {
  ExperimentConfig config;
  ExperimentData data;
  std::vector<RunArtifacts> runs;
  std::map<std::string, std::vector<double>> r2;  // by loss spec text
  double cpu_main_four = 0.0;
  std::vector<std::string> errors;
};

BlobsResults run_blobs(const fs::path& config_path, const fs::path& out) {
  BlobsResults res;
  res.config = load_experiment_config(config_path);
  res.config.output_dir = out;
  res.data = load_experiment_data(res.config);
  fs::remove_all(out);
  fs::create_directories(out / "runs");
  const auto plan = plan_runs(res.config);
  const std::set<std::string> main_four = {"softmax", "label_smoothing(alpha=0.1)", "cosine_softmax(tau=0.05)",
                                           "squared_error(kappa=1,M=1,scale=1)"};
  for (const auto& key : plan) {
    const double t0 = cpu_seconds();
    const RunOutcome o = run_single(res.config, res.data, key, out / "runs");
    if (main_four.count(to_string(key.run))) res.cpu_main_four += cpu_seconds() - t0;
    if (o.error) res.errors.push_back(run_dir_name(key) + ": " + *o.error);
  }
  res.runs = find_runs(res.config, out);
  for (const auto& run : res.runs) {
    const ActivationDump d = read_activation_dump(run.dir / "train_features.dump");
    res.r2[to_string(run.key.run)].push_back(separation_record(d.data, d.labels).cosine);
  }
  return res;
}

Verdict separation_order(const BlobsResults& b) {
  Verdict v;
  const std::vector<std::pair<std::string, std::string>> losses = {
      {"softmax", "softmax"},
      {"label_smoothing", "label_smoothing(alpha=0.1)"},
      {"cosine_softmax", "cosine_softmax(tau=0.05)"},
      {"squared_error", "squared_error(kappa=1,M=1,scale=1)"}};
  // Order the four losses by the paper's values, then require ours to rise
  // along the same order with every adjacent gap above the pooled stderr.
  std::vector<std::size_t> order = {0, 1, 2, 3};
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    return kPaperSeparation.at(losses[a].first) < kPaperSeparation.at(losses[c].first);
  });
  std::vector<MeanStderr> stats;
  for (const auto& [name, spec] : losses) stats.push_back(mean_stderr(b.r2.at(spec)));
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& s = stats[order[i]];
    v.detail << (i ? " < " : "") << losses[order[i]].first << " " << fmt(s.mean) << "+-" << fmt(s.stderr_, 2);
  }
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const auto& lo = stats[order[i]];
    const auto& hi = stats[order[i + 1]];
    const double gap = hi.mean - lo.mean;
    v.check(gap > pooled_stderr(lo, hi),
            losses[order[i + 1]].first + " - " + losses[order[i]].first + " = " + fmt(gap, 3) + " <= pooled stderr " +
                fmt(pooled_stderr(lo, hi), 3));
  }
  v.detail << "; n=" << stats[0].n << " seeds, " << fmt(b.cpu_main_four, 3) << " s cpu";
  v.check(stats[0].n == 5, "5 seeds per loss");
  v.check(b.cpu_main_four < 600.0, "runtime < 10 min cpu");
  for (const auto& e : b.errors) v.check(false, e);
  return v;
}

Verdict temperature_tradeoff(const BlobsResults& b) {
  Verdict v;
  std::vector<double> r2_means, transfer_means;
  for (const char* run_text : kTemperatureRuns) {
    r2_means.push_back(mean_stderr(b.r2.at(run_text)).mean);
    std::vector<double> acc;
    for (const auto& run : b.runs)
      if (to_string(run.key.run) == run_text) acc.push_back(transfer_record(b.config, run).test_accuracy);
    transfer_means.push_back(mean_stderr(acc).mean);
  }
  const double rho_r2 = spearman(kPaperTemperatures, r2_means);
  const double rho_paper = spearman(r2_means, kPaperTemperatureR2);
  bool decreasing = true;
  for (std::size_t i = 1; i < transfer_means.size(); ++i) decreasing &= transfer_means[i] < transfer_means[i - 1];
  const double rho_transfer_paper = spearman(transfer_means, kPaperTemperatureFood);
  v.detail << "tau 0.01/0.03/0.05/0.08: r2";
  for (double m : r2_means) v.detail << " " << fmt(m);
  v.detail << " (spearman vs tau " << fmt(rho_r2) << ", vs paper " << fmt(rho_paper) << "); transfer acc";
  for (double m : transfer_means) v.detail << " " << fmt(m);
  v.detail << " (spearman vs paper " << fmt(rho_transfer_paper) << ")";
  v.check(rho_r2 == 1.0, "r2 spearman = 1");
  v.check(rho_paper == 1.0, "r2 order matches paper");
  v.check(decreasing, "transfer strictly decreasing in tau");
  return v;
}

Verdict agreement_groups(const BlobsResults& b) {
  Verdict v;
  std::vector<RunArtifacts> runs;
  for (const auto& run : b.runs) {
    const std::string s = to_string(run.key.run);
    if (s == "softmax" || s == "squared_error(kappa=1,M=1,scale=1)") runs.push_back(run);
  }
  const AgreementSummary a = agreement_summary(runs, b.data.eval.labels, AgreementVariant::kSameTop1);
  v.detail << runs.size() << " models (softmax, squared_error): within-loss " << fmt(a.within_loss.mean) << ", across-loss "
           << fmt(a.across_loss.mean) << "; first merges within loss: " << (a.first_merges_within_loss ? "yes" : "no");
  v.check(runs.size() == 10, "5 seeds x 2 losses");
  v.check(a.within_loss.mean > a.across_loss.mean, "within-loss > across-loss");
  v.check(a.first_merges_within_loss, "dendrogram first merges within loss");
  return v;
}

// ---- 7 ----------------------------------------------------------------------

Verdict trainer_contracts() {
  Verdict v;
  const Batch data = make_blobs(100, 5, 10, 0.3, 77);
  const std::vector<std::pair<const char*, double>> kinds = {
      {"softmax", 0.05},
      {"label_smoothing(alpha=0.1)", 0.05},
      {"dropout(rho=0.7)", 0.05},
      {"extra_l2(lambda=0.0008)", 0.05},
      {"logit_penalty(beta=0.0006)", 0.05},
      {"logit_norm(tau=0.04)", 0.05},
      {"cosine_softmax(tau=0.05)", 0.05},
      {"sigmoid", 0.05},
      {"squared_error(kappa=1,M=1,scale=1)", 0.05},
  };
  bool identical = true;
  int slowest = 0;
  for (const auto& [text, lr] : kinds) {
    TrainConfig c;
    c.loss = parse_loss_spec(text);
    c.epochs = 100;
    c.batch_size = 32;
    c.peak_lr = lr;
    c.seed = 5;
    const TrainResult a = train(init_mlp(10, {32, 32}, 5, c.loss, 5), data, c);
    const TrainResult r = train(init_mlp(10, {32, 32}, 5, c.loss, 5), data, c);
    for (std::size_t i = 0; i < a.log.size(); ++i) {
      identical &= a.log[i].train_loss == r.log[i].train_loss && a.log[i].train_acc == r.log[i].train_acc &&
                   a.log[i].lr == r.log[i].lr;
    }
    int first = 0;
    for (const auto& rec : a.log)
      if (rec.train_acc >= 0.95) {
        first = rec.epoch;
        break;
      }
    v.check(first > 0, std::string(text) + " below 95% train accuracy");
    slowest = std::max(slowest, first);
  }
  v.detail << kinds.size() << " loss kinds: logs bit-identical across repeats: " << (identical ? "yes" : "no")
           << "; slowest to 95% train accuracy: epoch " << slowest;
  v.check(identical, "bit-identical logs");
  return v;
}

// ---- 9 ----------------------------------------------------------------------

Verdict probe_mechanics() {
  Verdict v;
  const Batch data = make_blobs(60, 4, 8, 2.0, 99);
  const auto grid = default_lambda_grid();
  const double tol = 1e-7;
  const int iters = 100000;
  double obj_gap = 0.0, weight_gap = 0.0;
  int shrink_violations = 0, unconverged = 0;
  std::vector<double> norms;
  LogregModel prev;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const LogregFit warm = fit_logreg(data.features, data.labels, 4, grid[i], i ? &prev : nullptr, tol, iters);
    const LogregFit cold = fit_logreg(data.features, data.labels, 4, grid[i], nullptr, tol, iters);
    unconverged += !warm.converged + !cold.converged;
    obj_gap = std::max(obj_gap, std::abs(warm.objective - cold.objective) / std::max(1.0, std::abs(cold.objective)));
    weight_gap = std::max(weight_gap, (warm.model.weights - cold.model.weights).norm() /
                                          std::max(1.0, cold.model.weights.norm()));
    norms.push_back(warm.model.weights.norm());
    if (i && !(norms[i] <= norms[i - 1])) ++shrink_violations;
    prev = warm.model;
  }

  ProbeConfig pc;
  pc.tolerance = tol;
  pc.max_iterations = iters;
  const ProbeResult sweep = sweep_and_retrain(data.features, data.labels, data.features, data.labels, pc);
  for (std::size_t i = 1; i < sweep.weight_norms.size(); ++i)
    if (!(sweep.weight_norms[i] <= sweep.weight_norms[i - 1])) ++shrink_violations;

  v.detail << grid.size() << " lambdas: warm vs cold max rel objective gap " << fmt(obj_gap, 2) << ", weights "
           << fmt(weight_gap, 2) << "; shrinkage violations " << shrink_violations << "; unconverged fits "
           << unconverged;
  v.check(grid.size() == 45, "45-point grid");
  v.check(unconverged == 0, "all fits converged");
  v.check(obj_gap <= 1e-10, "objective gap <= 1e-10");
  v.check(weight_gap <= 1e-5, "weight gap <= 1e-5");
  v.check(shrink_violations == 0, "monotone shrinkage");
  return v;
}

}  // namespace
}  // namespace losslab

int main(int argc, char** argv) {
  using namespace losslab;
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
  const fs::path config = argc > 2 ? fs::path(argv[2]) : fs::path(LOSSLAB_TEST_DATA_DIR) / "blobs.ini";
  int failures = 0;
  auto report = [&](int id, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failures += !v.pass;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail.str() << std::endl;
  };

  report(1, gradient_suite);
  report(2, reductions);
  report(3, metric_oracles);
  report(4, calibration_contracts);
  std::optional<BlobsResults> blobs;
  std::string blobs_error;
  try {
    blobs = run_blobs(config, work / "blobs");
  } catch (const std::exception& e) {
    blobs_error = e.what();
  }
  auto with_blobs = [&](Verdict (*fn)(const BlobsResults&)) {
    return [&, fn] {
      if (!blobs) throw std::runtime_error("blobs experiment failed: " + blobs_error);
      return fn(*blobs);
    };
  };
  report(5, with_blobs(separation_order));
  report(6, with_blobs(temperature_tradeoff));
  report(7, trainer_contracts);
  report(8, with_blobs(agreement_groups));
  report(9, probe_mechanics);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
