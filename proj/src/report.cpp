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

#include "losslab/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "losslab/activation_dump.hpp"
#include "losslab/mlp.hpp"
#include "losslab/repr.hpp"
#include "text_util.hpp"

namespace losslab {

namespace fs = std::filesystem;
using internal::format_double;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) { return std::isnan(v) ? "nan" : format_double(v); }

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::string& header, std::vector<fs::path>* written)
      : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << header << '\n';
    written->push_back(path);
  }
  ~CsvFile() { out_.flush(); }

  template <class... Fields>
  void row(const Fields&... fields) {
    std::string line;
    ((line += (line.empty() ? "" : ",") + cell(fields)), ...);
    out_ << line << '\n';
    if (!out_) throw IoError("write failed for " + path_.string());
  }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class Int, std::enable_if_t<std::is_integral_v<Int>, int> = 0>
  static std::string cell(Int v) {
    return std::to_string(v);
  }

  fs::path path_;
  std::ofstream out_;
};

std::string tag(const RunArtifacts& r) { return run_tag(r.key.run); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
}

// Run indices grouped by loss run, in first-appearance order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_runs(const std::vector<RunArtifacts>& runs) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string t = tag(runs[i]);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == t; });
    if (it == groups.end()) groups.push_back({t, {i}});
    else it->second.push_back(i);
  }
  return groups;
}

template <class Get>
MeanStderr group_stat(const std::vector<std::size_t>& idx, Get get) {
  std::vector<double> v;
  for (std::size_t i : idx) v.push_back(get(i));
  return mean_stderr(v);
}

void write_text(const fs::path& path, const std::string& text, std::vector<fs::path>* written) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
  written->push_back(path);
}

std::string pm(const MeanStderr& m) { return format_double(m.mean) + " ± " + format_double(m.stderr_); }

}  // namespace

MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr out;
  out.n = values.size();
  if (values.empty()) {
    out.mean = kNaN;
    return out;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(out.n);
  if (out.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stderr_ = std::sqrt(ss / static_cast<double>(out.n - 1)) / std::sqrt(static_cast<double>(out.n));
  }
  return out;
}

std::vector<RunArtifacts> find_runs(const ExperimentConfig& config, const fs::path& out_dir) {
  std::vector<RunArtifacts> runs;
  for (const RunKey& key : plan_runs(config)) {
    RunArtifacts r{key, out_dir / "runs" / run_dir_name(key)};
    if (!fs::exists(r.dir / "model.bin")) throw IoError("missing run " + r.dir.string() + " (run `train` first)");
    runs.push_back(std::move(r));
  }
  return runs;
}

SeparationRecord separation_record(const Matrix& features, const Labels& labels) {
  SeparationRecord rec;
  std::vector<std::size_t> keep;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    if (features.row(i).norm() > kNormEpsilon) keep.push_back(static_cast<std::size_t>(i));
  }
  rec.zero_rows = static_cast<std::size_t>(features.rows()) - keep.size();
  Matrix live(static_cast<Eigen::Index>(keep.size()), features.cols());
  Labels live_labels(keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    live.row(static_cast<Eigen::Index>(j)) = features.row(static_cast<Eigen::Index>(keep[j]));
    live_labels[j] = labels[keep[j]];
  }
  rec.cosine = class_separation_r2(live, live_labels, SeparationIndex::kCosine);
  rec.cosine_mean_subtracted = class_separation_r2(features, labels, SeparationIndex::kCosineMeanSubtracted);
  rec.euclidean = class_separation_r2(features, labels, SeparationIndex::kEuclidean);
  return rec;
}

CalibrationRecord calibration_record(const Matrix& logits, const Labels& labels, ProbabilitySource source) {
  CalibrationRecord rec;
  rec.fit = fit_temperature(logits, labels, source);
  rec.top5_accuracy = topk_accuracy(logits, labels, std::min<int>(5, static_cast<int>(logits.cols())));
  return rec;
}

ProbeResult transfer_record(const ExperimentConfig& config, const RunArtifacts& run) {
  const ActivationDump train = read_activation_dump(run.dir / "transfer_train.dump");
  const ActivationDump test = read_activation_dump(run.dir / "transfer_test.dump");
  ProbeConfig pc;
  pc.val_fraction = config.transfer.val_fraction;
  pc.max_iterations = config.transfer.max_iterations;
  pc.tolerance = config.transfer.tolerance;
  pc.seed = config.dataset.split_seed;
  return sweep_and_retrain(train.data, train.labels, test.data, test.labels, pc);
}

AgreementSummary agreement_summary(const std::vector<RunArtifacts>& runs, const Labels& labels,
                                   AgreementVariant variant) {
  if (runs.size() < 2) throw InvalidInput("agreement: need at least two runs");
  std::vector<Labels> preds;
  std::vector<std::string> names;
  for (const RunArtifacts& r : runs) {
    preds.push_back(read_predictions_csv(r.dir / "predictions.csv").predicted);
    names.push_back(run_dir_name(r.key));
  }
  AgreementSummary s;
  s.matrix = agreement_matrix(preds, labels, variant, names);
  const auto groups = group_runs(runs);
  s.group.resize(runs.size());
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t i : groups[g].second) s.group[i] = static_cast<int>(g);

  std::vector<double> within, across;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      const double a = s.matrix.agree(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::isnan(a)) continue;
      (s.group[i] == s.group[j] ? within : across).push_back(a);
    }
  }
  s.within_loss = mean_stderr(within);
  s.across_loss = mean_stderr(across);

  s.linkage = linkage_dendrogram(agreement_distance(s.matrix));
  const int n = static_cast<int>(runs.size());
  s.first_merges_within_loss = true;
  for (const Merge& m : s.linkage) {
    if (m.a < n && m.b < n && s.group[static_cast<std::size_t>(m.a)] != s.group[static_cast<std::size_t>(m.b)]) {
      s.first_merges_within_loss = false;
    }
  }
  return s;
}

std::vector<fs::path> write_accuracy_report(const std::vector<RunArtifacts>& runs, const fs::path& report_dir) {
  fs::create_directories(report_dir);
  std::vector<fs::path> written;
  std::vector<double> train_acc, eval_acc;
  std::vector<int> best;
  {
    CsvFile csv(report_dir / "accuracy.csv", "run,seed,train_accuracy,eval_accuracy,best_epoch,best_eval_accuracy",
                &written);
    for (const RunArtifacts& r : runs) {
      const nlohmann::json j = read_json(r.dir / "run.json");
      const auto log = read_log_csv(r.dir / "log.csv");
      const int b = best_epoch(log);
      const double best_acc = b > 0 && log[static_cast<std::size_t>(b - 1)].holdout_acc
                                  ? *log[static_cast<std::size_t>(b - 1)].holdout_acc
                                  : kNaN;
      train_acc.push_back(j.at("train_accuracy").get<double>());
      eval_acc.push_back(j.at("eval_accuracy").get<double>());
      csv.row(tag(r), r.key.seed, train_acc.back(), eval_acc.back(), b, best_acc);
    }
  }
  CsvFile csv(report_dir / "accuracy_summary.csv",
              "run,n,train_accuracy_mean,train_accuracy_stderr,eval_accuracy_mean,eval_accuracy_stderr", &written);
  for (const auto& [name, idx] : group_runs(runs)) {
    const MeanStderr tr = group_stat(idx, [&](std::size_t i) { return train_acc[i]; });
    const MeanStderr ev = group_stat(idx, [&](std::size_t i) { return eval_acc[i]; });
    csv.row(name, tr.n, tr.mean, tr.stderr_, ev.mean, ev.stderr_);
  }
  return written;
}

std::vector<fs::path> write_representation_report(const ExperimentConfig& config,
                                                  const std::vector<RunArtifacts>& runs,
                                                  const fs::path& report_dir) {
  fs::create_directories(report_dir);
  std::vector<fs::path> written;
  const AnalysisFlags& flags = config.analyses;
  std::vector<ActivationDump> features;
  for (const RunArtifacts& r : runs) features.push_back(read_activation_dump(r.dir / "features.dump"));
  const auto groups = group_runs(runs);

  // Class separation is reported on both splits; summaries use the
  // training split.
  std::vector<SeparationRecord> sep;
  if (flags.separation) {
    {
      CsvFile csv(report_dir / "separation.csv",
                  "run,seed,split,r2_cosine,r2_cosine_mean_subtracted,r2_euclidean,zero_rows", &written);
      for (std::size_t i = 0; i < runs.size(); ++i) {
        const ActivationDump tr = read_activation_dump(runs[i].dir / "train_features.dump");
        sep.push_back(separation_record(tr.data, tr.labels));
        const SeparationRecord ev = separation_record(features[i].data, features[i].labels);
        for (const auto& [split, rec] : {std::pair{"train", &std::as_const(sep[i])}, std::pair{"eval", &ev}}) {
          csv.row(tag(runs[i]), runs[i].key.seed, split, rec->cosine, rec->cosine_mean_subtracted, rec->euclidean,
                  rec->zero_rows);
        }
      }
    }
    CsvFile csv(report_dir / "separation_summary.csv",
                "run,n,r2_cosine_mean,r2_cosine_stderr,r2_cosine_mean_subtracted_mean,"
                "r2_cosine_mean_subtracted_stderr,r2_euclidean_mean,r2_euclidean_stderr",
                &written);
    for (const auto& [name, idx] : groups) {
      const MeanStderr c = group_stat(idx, [&](std::size_t i) { return sep[i].cosine; });
      const MeanStderr m = group_stat(idx, [&](std::size_t i) { return sep[i].cosine_mean_subtracted; });
      const MeanStderr e = group_stat(idx, [&](std::size_t i) { return sep[i].euclidean; });
      csv.row(name, c.n, c.mean, c.stderr_, m.mean, m.stderr_, e.mean, e.stderr_);
    }

    // Cosine softmax runs ordered by temperature.
    std::vector<std::pair<double, std::size_t>> cos_groups;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const LossSpec& spec = runs[groups[g].second.front()].key.run.spec;
      if (const auto* cs = std::get_if<CosineSoftmax>(&spec.kind)) cos_groups.push_back({cs->temperature, g});
    }
    if (!cos_groups.empty()) {
      std::stable_sort(cos_groups.begin(), cos_groups.end());
      CsvFile t(report_dir / "temperature_sweep.csv", "tau,run,n,r2_cosine_mean,r2_cosine_stderr,eval_accuracy_mean",
                &written);
      for (const auto& [tau, g] : cos_groups) {
        const auto& idx = groups[g].second;
        const MeanStderr c = group_stat(idx, [&](std::size_t i) { return sep[i].cosine; });
        const MeanStderr acc = group_stat(idx, [&](std::size_t i) {
          return read_json(runs[i].dir / "run.json").at("eval_accuracy").get<double>();
        });
        t.row(tau, groups[g].first, c.n, c.mean, c.stderr_, acc.mean);
      }
    }
  }

  if (flags.cka) {
    std::ostringstream header;
    header << "run";
    for (const RunArtifacts& r : runs) header << ',' << run_dir_name(r.key);
    CsvFile csv(report_dir / "cka_penultimate.csv", header.str(), &written);
    Matrix cka = Matrix::Constant(static_cast<Eigen::Index>(runs.size()), static_cast<Eigen::Index>(runs.size()), kNaN);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      for (std::size_t j = i; j < runs.size(); ++j) {
        double v = kNaN;
        try {
          v = linear_cka(features[i].data, features[j].data);
        } catch (const DegenerateInput&) {
        }
        cka(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        cka(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
      }
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      std::string line = run_dir_name(runs[i].key);
      for (std::size_t j = 0; j < runs.size(); ++j) line += "," + num(cka(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      csv.row(line);
    }
  }

  if (flags.sparsity || flags.cka) {
    CsvFile sp(report_dir / "sparsity.csv", "run,seed,layer,active_fraction", &written);
    std::optional<CsvFile> layers;
    if (flags.cka) layers.emplace(report_dir / "cka_layers.csv", "run,seed,layer_a,layer_b,cka", &written);
    for (const RunArtifacts& r : runs) {
      std::vector<Matrix> hidden;
      for (int l = 1; fs::exists(r.dir / ("hidden" + std::to_string(l) + ".dump")); ++l) {
        hidden.push_back(read_activation_dump(r.dir / ("hidden" + std::to_string(l) + ".dump")).data);
      }
      if (flags.sparsity) {
        const std::vector<double> profile = sparsity_profile(hidden);
        for (std::size_t l = 0; l < profile.size(); ++l) sp.row(tag(r), r.key.seed, l + 1, profile[l]);
      }
      if (layers) {
        for (std::size_t a = 0; a < hidden.size(); ++a) {
          for (std::size_t b = a + 1; b < hidden.size(); ++b) {
            double v = kNaN;
            try {
              v = linear_cka(hidden[a], hidden[b]);
            } catch (const DegenerateInput&) {
            }
            layers->row(tag(r), r.key.seed, a + 1, b + 1, v);
          }
        }
      }
    }
  }

  if (flags.avh || flags.spectra) {
    std::optional<CsvFile> avh, spectra;
    if (flags.avh) avh.emplace(report_dir / "avh.csv", "run,seed,mean_avh,median_avh", &written);
    if (flags.spectra) spectra.emplace(report_dir / "spectra.csv", "run,seed,mode,index,singular_value", &written);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const MlpModel model = load_model(runs[i].dir / "model.bin");
      const Matrix& x = features[i].data;
      if (avh) {
        // AVH needs a direction for every example; zero rows are skipped.
        std::vector<Eigen::Index> live;
        for (Eigen::Index r = 0; r < x.rows(); ++r)
          if (x.row(r).norm() > kNormEpsilon) live.push_back(r);
        Matrix xl(static_cast<Eigen::Index>(live.size()), x.cols());
        Labels yl;
        for (std::size_t k = 0; k < live.size(); ++k) {
          xl.row(static_cast<Eigen::Index>(k)) = x.row(live[k]);
          yl.push_back(features[i].labels[static_cast<std::size_t>(live[k])]);
        }
        Vector v = angular_visual_hardness(model.output, xl, yl);
        std::vector<double> sorted(v.data(), v.data() + v.size());
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        const double median = m == 0 ? kNaN : (m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]));
        avh->row(tag(runs[i]), runs[i].key.seed, m == 0 ? kNaN : v.mean(), median);
      }
      if (spectra) {
        auto emit = [&](const char* mode, const Vector& s) {
          for (Eigen::Index k = 0; k < s.size(); ++k) spectra->row(tag(runs[i]), runs[i].key.seed, mode, k + 1, s[k]);
        };
        emit("activations", singular_spectrum(x, SpectrumMode::kActivations));
        emit("class_centroids", singular_spectrum(x, SpectrumMode::kClassCentroids, &features[i].labels));
        emit("output_weights", singular_spectrum(model.output.weights, SpectrumMode::kWeights));
      }
    }
  }

  if (flags.separation) {
    CsvFile csv(report_dir / "density.csv", "run,seed,distance,within_density,between_density", &written);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const DensityCurves d = cosine_distance_density(features[i].data, features[i].labels, config.kde_bandwidth);
      for (Eigen::Index k = 0; k < d.grid.size(); ++k) {
        csv.row(tag(runs[i]), runs[i].key.seed, d.grid[k], d.within[k], d.between[k]);
      }
    }
  }
  return written;
}

std::vector<fs::path> write_calibration_report(const std::vector<RunArtifacts>& runs, const fs::path& report_dir) {
  fs::create_directories(report_dir);
  std::vector<fs::path> written;
  std::vector<CalibrationRecord> recs;
  {
    CsvFile csv(report_dir / "calibration.csv",
                "run,seed,accuracy,top5_accuracy,nll,ece,temperature,nll_after,ece_after", &written);
    CsvFile bins(report_dir / "calibration_bins.csv", "run,seed,stage,bin,lower,upper,count,accuracy,confidence",
                 &written);
    for (const RunArtifacts& r : runs) {
      const Matrix logits = read_matrix_csv(r.dir / "logits.csv");
      const Labels labels = read_activation_dump(r.dir / "features.dump").labels;
      recs.push_back(calibration_record(logits, labels, probability_source(r.key.run.spec)));
      const TemperatureFit& f = recs.back().fit;
      csv.row(tag(r), r.key.seed, f.before.accuracy, recs.back().top5_accuracy, f.before.nll, f.before.ece,
              f.temperature, f.after.nll, f.after.ece);
      for (const auto& [stage, rep] : {std::pair{"before", &f.before}, std::pair{"after", &f.after}}) {
        for (std::size_t b = 0; b < rep->bins.size(); ++b) {
          const CalibrationBin& cb = rep->bins[b];
          bins.row(tag(r), r.key.seed, stage, b, cb.lower, cb.upper, cb.count, cb.accuracy, cb.confidence);
        }
      }
    }
  }
  CsvFile csv(report_dir / "calibration_summary.csv",
              "run,n,nll_mean,nll_stderr,ece_mean,ece_stderr,temperature_mean,nll_after_mean,ece_after_mean",
              &written);
  for (const auto& [name, idx] : group_runs(runs)) {
    const MeanStderr n = group_stat(idx, [&](std::size_t i) { return recs[i].fit.before.nll; });
    const MeanStderr e = group_stat(idx, [&](std::size_t i) { return recs[i].fit.before.ece; });
    const MeanStderr t = group_stat(idx, [&](std::size_t i) { return recs[i].fit.temperature; });
    const MeanStderr na = group_stat(idx, [&](std::size_t i) { return recs[i].fit.after.nll; });
    const MeanStderr ea = group_stat(idx, [&](std::size_t i) { return recs[i].fit.after.ece; });
    csv.row(name, n.n, n.mean, n.stderr_, e.mean, e.stderr_, t.mean, na.mean, ea.mean);
  }
  return written;
}

std::vector<fs::path> write_agreement_report(const std::vector<RunArtifacts>& runs, const fs::path& report_dir) {
  fs::create_directories(report_dir);
  std::vector<fs::path> written;
  const Labels labels = read_activation_dump(runs.front().dir / "features.dump").labels;
  {
    CsvFile leaves(report_dir / "linkage_leaves.csv", "id,run", &written);
    for (std::size_t i = 0; i < runs.size(); ++i) leaves.row(i, run_dir_name(runs[i].key));
  }
  CsvFile summary(report_dir / "agreement_summary.csv",
                  "variant,within_loss_mean,within_loss_stderr,within_loss_pairs,across_loss_mean,across_loss_stderr,"
                  "across_loss_pairs,first_merges_within_loss",
                  &written);
  for (AgreementVariant v : {AgreementVariant::kSameTop1, AgreementVariant::kBothCorrectOrBothIncorrect,
                             AgreementVariant::kAgreeOnMutualErrors}) {
    const AgreementSummary s = agreement_summary(runs, labels, v);
    const std::string name = to_string(v);
    summary.row(name, s.within_loss.mean, s.within_loss.stderr_, s.within_loss.n, s.across_loss.mean,
                s.across_loss.stderr_, s.across_loss.n, s.first_merges_within_loss ? "true" : "false");

    std::string header = "run";
    for (const std::string& m : s.matrix.models) header += "," + m;
    CsvFile m(report_dir / ("agreement_" + name + ".csv"), header, &written);
    for (Eigen::Index i = 0; i < s.matrix.agree.rows(); ++i) {
      std::string line = s.matrix.models[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < s.matrix.agree.cols(); ++j) line += "," + num(s.matrix.agree(i, j));
      m.row(line);
    }
    CsvFile l(report_dir / ("linkage_" + name + ".csv"), "step,a,b,height,size", &written);
    for (std::size_t k = 0; k < s.linkage.size(); ++k) {
      l.row(k, s.linkage[k].a, s.linkage[k].b, s.linkage[k].height, s.linkage[k].size);
    }
  }

  CsvFile ens(report_dir / "ensemble.csv", "run,members,modal_accuracy,mean_member_accuracy", &written);
  for (const auto& [name, idx] : group_runs(runs)) {
    std::vector<Labels> preds;
    double member = 0.0;
    for (std::size_t i : idx) {
      preds.push_back(read_predictions_csv(runs[i].dir / "predictions.csv").predicted);
      std::size_t hits = 0;
      for (std::size_t k = 0; k < labels.size(); ++k) hits += preds.back()[k] == labels[k];
      member += static_cast<double>(hits) / static_cast<double>(labels.size());
    }
    const Labels modal = ensemble_modal(preds);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) hits += modal[k] == labels[k];
    ens.row(name, idx.size(), static_cast<double>(hits) / static_cast<double>(labels.size()),
            member / static_cast<double>(idx.size()));
  }
  return written;
}

std::vector<fs::path> write_transfer_report(const ExperimentConfig& config, const std::vector<RunArtifacts>& runs,
                                            const fs::path& report_dir, int jobs) {
  fs::create_directories(report_dir);
  std::vector<fs::path> written;
  std::vector<ProbeResult> results(runs.size());
  parallel_for(runs.size(), jobs, [&](std::size_t i) { results[i] = transfer_record(config, runs[i]); });

  nlohmann::json all = nlohmann::json::array();
  {
    CsvFile csv(report_dir / "transfer.csv", "run,seed,best_lambda,train_accuracy,test_accuracy,refit_converged",
                &written);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const ProbeResult& p = results[i];
      csv.row(tag(runs[i]), runs[i].key.seed, p.best_lambda, p.train_accuracy, p.test_accuracy,
              p.refit_converged ? "true" : "false");
      nlohmann::json j;
      j["run"] = run_dir_name(runs[i].key);
      j["best_lambda"] = p.best_lambda;
      j["train_accuracy"] = p.train_accuracy;
      j["test_accuracy"] = p.test_accuracy;
      j["refit_converged"] = p.refit_converged;
      j["lambdas"] = p.lambdas;
      j["val_accuracy"] = p.val_accuracy;
      j["weight_norms"] = p.weight_norms;
      all.push_back(std::move(j));
    }
  }
  write_text(report_dir / "transfer.json", all.dump(2) + "\n", &written);
  CsvFile csv(report_dir / "transfer_summary.csv", "run,n,test_accuracy_mean,test_accuracy_stderr", &written);
  for (const auto& [name, idx] : group_runs(runs)) {
    const MeanStderr t = group_stat(idx, [&](std::size_t i) { return results[i].test_accuracy; });
    csv.row(name, t.n, t.mean, t.stderr_);
  }
  return written;
}

std::vector<fs::path> write_full_report(const ExperimentConfig& config, const fs::path& out_dir, int jobs) {
  const std::vector<RunArtifacts> runs = find_runs(config, out_dir);
  const fs::path report_dir = out_dir / "report";
  std::vector<fs::path> written = write_accuracy_report(runs, report_dir);
  auto append = [&](std::vector<fs::path> more) { written.insert(written.end(), more.begin(), more.end()); };
  const AnalysisFlags& f = config.analyses;
  if (f.cka || f.separation || f.sparsity || f.avh || f.spectra) {
    append(write_representation_report(config, runs, report_dir));
  }
  if (f.calibration) append(write_calibration_report(runs, report_dir));
  if (f.agreement && runs.size() >= 2) append(write_agreement_report(runs, report_dir));
  if (f.transfer) append(write_transfer_report(config, runs, report_dir, jobs));

  // report.md repeats the headline summaries.
  std::ostringstream md;
  md << "# losslab report\n\nRuns: " << runs.size() << ". Config: `config.ini`.\n\n";
  md << "| run | n | eval accuracy |";
  const bool sep = f.separation;
  if (sep) md << " R² cosine (train) | R² mean-subtracted | R² euclidean |";
  md << "\n|---|---|---|" << (sep ? "---|---|---|" : "") << "\n";
  for (const auto& [name, idx] : group_runs(runs)) {
    const MeanStderr acc = group_stat(idx, [&](std::size_t i) {
      return read_json(runs[i].dir / "run.json").at("eval_accuracy").get<double>();
    });
    md << "| " << name << " | " << acc.n << " | " << pm(acc) << " |";
    if (sep) {
      std::vector<SeparationRecord> recs;
      for (std::size_t i : idx) {
        const ActivationDump d = read_activation_dump(runs[i].dir / "train_features.dump");
        recs.push_back(separation_record(d.data, d.labels));
      }
      auto stat = [&](double SeparationRecord::*field) {
        std::vector<double> v;
        for (const auto& r : recs) v.push_back(r.*field);
        return pm(mean_stderr(v));
      };
      md << ' ' << stat(&SeparationRecord::cosine) << " | " << stat(&SeparationRecord::cosine_mean_subtracted)
         << " | " << stat(&SeparationRecord::euclidean) << " |";
    }
    md << '\n';
  }
  md << "\nFiles:\n\n";
  for (const fs::path& p : written) md << "- `" << p.filename().string() << "`\n";
  write_text(report_dir / "report.md", md.str(), &written);
  return written;
}

}  // namespace losslab
