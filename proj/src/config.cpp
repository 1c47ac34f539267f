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

#include "losslab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "text_util.hpp"

namespace losslab {

namespace pt = boost::property_tree;

namespace {

// Reads typed values out of one INI section and remembers which keys were
// used, so leftovers can be reported as unknown.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name, std::string origin)
      : tree_(tree), name_(std::move(name)), origin_(std::move(origin)) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return std::string(internal::trim(*v));
  }

  void get(const std::string& key, double* out) {
    if (auto v = raw(key)) {
      if (!internal::parse_double(*v, out)) fail(key, *v, "a number");
    }
  }
  template <class Int>
  void get_int(const std::string& key, Int* out) {
    if (auto v = raw(key)) {
      if (!internal::parse_int(*v, out)) fail(key, *v, "an integer");
    }
  }
  void get(const std::string& key, int* out) { get_int(key, out); }
  void get(const std::string& key, std::uint64_t* out) { get_int(key, out); }
  void get(const std::string& key, bool* out) {
    if (auto v = raw(key)) {
      if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") *out = true;
      else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") *out = false;
      else fail(key, *v, "true or false");
    }
  }
  void get(const std::string& key, std::string* out) {
    if (auto v = raw(key)) *out = *v;
  }
  void get(const std::string& key, std::vector<double>* out) {
    if (auto v = raw(key)) {
      out->clear();
      for (std::string_view f : internal::split(*v, ',')) {
        double d = 0.0;
        if (!internal::parse_double(f, &d)) fail(key, *v, "a comma-separated list of numbers");
        out->push_back(d);
      }
    }
  }
  template <class Int>
  void get_ints(const std::string& key, std::vector<Int>* out, bool allow_empty) {
    if (auto v = raw(key)) {
      out->clear();
      if (v->empty() && allow_empty) return;
      for (std::string_view f : internal::split(*v, ',')) {
        Int d = 0;
        if (!internal::parse_int(f, &d)) fail(key, *v, "a comma-separated list of integers");
        out->push_back(d);
      }
    }
  }

  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!used_.count(key)) {
        throw InvalidInput(origin_ + ": unknown key '" + key + "' in section [" + name_ + "]");
      }
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& value, const char* expected) const {
    throw InvalidInput(origin_ + ": [" + name_ + "] " + key + " = '" + value + "' is not " + expected);
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::string origin_;
  std::set<std::string> used_;
};

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + internal::format_double(v[i]);
  return out;
}

template <class Int>
std::string join_ints(const std::vector<Int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

LossRun parse_loss_run(const std::string& text) {
  std::string_view t = internal::trim(text);
  const std::size_t at = t.find('@');
  LossRun run;
  run.spec = parse_loss_spec(t.substr(0, at));
  if (at == std::string_view::npos) return run;
  for (std::string_view kv : internal::split(t.substr(at + 1), ',')) {
    const std::size_t eq = kv.find('=');
    double v = 0.0;
    if (eq == std::string_view::npos || !internal::parse_double(internal::trim(kv.substr(eq + 1)), &v)) {
      throw InvalidInput("bad loss override '" + std::string(kv) + "' in '" + text + "'");
    }
    std::string_view key = internal::trim(kv.substr(0, eq));
    if (key == "lr") run.peak_lr = v;
    else if (key == "wd") run.weight_decay_product = v;
    else throw InvalidInput("unknown loss override '" + std::string(key) + "' in '" + text + "' (expected lr or wd)");
  }
  return run;
}

std::string to_string(const LossRun& run) {
  std::string out = to_string(run.spec);
  std::string extra;
  if (run.peak_lr) extra += "lr=" + internal::format_double(*run.peak_lr);
  if (run.weight_decay_product) extra += (extra.empty() ? "" : ",") + std::string("wd=") + internal::format_double(*run.weight_decay_product);
  return extra.empty() ? out : out + "@" + extra;
}

std::string run_tag(const LossRun& run) {
  std::string out;
  for (char c : to_string(run)) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-') out += c;
    else if (c == '=') out += '-';
    else if (c == ')') continue;
    else out += '_';
  }
  return out;
}

void ExperimentConfig::validate() const {
  const DatasetConfig& d = dataset;
  if (d.source == DatasetConfig::Source::kBlobs) {
    if (d.n_per_class < 2 || d.num_classes < 2 || d.feature_dim < 1 || !(d.spread >= 0.0)) {
      throw InvalidInput("config: blobs need n_per_class >= 2, num_classes >= 2, feature_dim >= 1, spread >= 0");
    }
  } else if (d.path.empty()) {
    throw InvalidInput("config: dataset path is required for file sources");
  } else if (d.source == DatasetConfig::Source::kIdx && !d.labels_path) {
    throw InvalidInput("config: idx datasets need labels_path");
  }
  if (!(d.eval_fraction > 0.0 && d.eval_fraction < 1.0)) throw InvalidInput("config: eval_fraction must be in (0, 1)");
  for (int w : hidden) {
    if (w < 1) throw InvalidInput("config: hidden widths must be positive");
  }
  if (seeds.empty()) throw InvalidInput("config: at least one seed is required");
  if (losses.empty()) throw InvalidInput("config: at least one loss is required");
  for (const LossRun& r : losses) train_config(r, seeds.front()).validate();
  if (analyses.transfer) {
    if (d.source != DatasetConfig::Source::kBlobs) throw InvalidInput("config: the transfer analysis needs a blobs dataset");
    if (transfer.extra_classes < 2 || transfer.coarse_classes < 2 ||
        transfer.extra_classes % transfer.coarse_classes != 0) {
      throw InvalidInput("config: transfer extra_classes must be a multiple of coarse_classes (both >= 2)");
    }
    if (!(transfer.test_fraction > 0.0 && transfer.test_fraction < 1.0)) {
      throw InvalidInput("config: transfer test_fraction must be in (0, 1)");
    }
  }
  if (!(kde_bandwidth > 0.0)) throw InvalidInput("config: kde_bandwidth must be positive");
  if (jobs < 1) throw InvalidInput("config: jobs must be >= 1");
  if (sweep.peak_lrs.empty() || sweep.weight_decay_products.empty() || sweep.seeds.empty()) {
    throw InvalidInput("config: sweep grids must be non-empty");
  }
  if (!(sweep.holdout_fraction > 0.0 && sweep.holdout_fraction < 1.0)) {
    throw InvalidInput("config: sweep holdout_fraction must be in (0, 1)");
  }
}

TrainConfig ExperimentConfig::train_config(const LossRun& run, std::uint64_t seed) const {
  TrainConfig c = train;
  c.loss = run.spec;
  c.seed = seed;
  if (run.peak_lr) c.peak_lr = *run.peak_lr;
  if (run.weight_decay_product) c.weight_decay_product = *run.weight_decay_product;
  return c;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(origin + ":" + std::to_string(e.line()) + ": " + e.message(), e.line());
  }
  const std::set<std::string> known = {"dataset", "model", "train", "experiment", "analyses", "transfer", "sweep"};
  for (const auto& [name, child] : tree) {
    if (!known.count(name)) throw InvalidInput(origin + ": unknown section [" + name + "]");
    if (child.empty() && !child.data().empty()) {
      throw InvalidInput(origin + ": key '" + name + "' outside any section");
    }
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name, origin);
  };

  ExperimentConfig cfg;
  {
    Section s = section("dataset");
    DatasetConfig& d = cfg.dataset;
    std::string source = "blobs";
    s.get("source", &source);
    if (source == "blobs") d.source = DatasetConfig::Source::kBlobs;
    else if (source == "csv") d.source = DatasetConfig::Source::kCsv;
    else if (source == "idx") d.source = DatasetConfig::Source::kIdx;
    else s.fail("source", source, "blobs, csv or idx");
    s.get("n_per_class", &d.n_per_class);
    s.get("num_classes", &d.num_classes);
    s.get("feature_dim", &d.feature_dim);
    s.get("spread", &d.spread);
    s.get("seed", &d.seed);
    if (auto p = s.raw("path")) d.path = *p;
    if (auto p = s.raw("labels_path")) d.labels_path = *p;
    s.get("eval_fraction", &d.eval_fraction);
    s.get("split_seed", &d.split_seed);
    s.check_unknown();
  }
  {
    Section s = section("model");
    s.get_ints("hidden", &cfg.hidden, true);
    s.check_unknown();
  }
  {
    Section s = section("train");
    TrainConfig& t = cfg.train;
    s.get("epochs", &t.epochs);
    s.get("batch_size", &t.batch_size);
    s.get("peak_lr", &t.peak_lr);
    std::string schedule = "cosine";
    s.get("schedule", &schedule);
    WarmupThenExponential w;
    s.get("warmup_epochs", &w.warmup_epochs);
    s.get("decay_per_epoch", &w.decay_per_epoch);
    if (schedule == "cosine") t.schedule = CosineNoRestart{};
    else if (schedule == "warmup_exponential") t.schedule = w;
    else s.fail("schedule", schedule, "cosine or warmup_exponential");
    s.get("momentum", &t.nesterov_momentum);
    s.get("weight_decay_product", &t.weight_decay_product);
    if (auto v = s.raw("ema_momentum")) {
      double m = 0.0;
      if (!internal::parse_double(*v, &m)) s.fail("ema_momentum", *v, "a number");
      t.ema_momentum = m;
    }
    s.check_unknown();
  }
  {
    Section s = section("experiment");
    s.get_ints("seeds", &cfg.seeds, false);
    if (auto v = s.raw("losses")) {
      for (std::string_view item : internal::split(*v, ';')) {
        if (!item.empty()) cfg.losses.push_back(parse_loss_run(std::string(item)));
      }
    }
    if (auto v = s.raw("output_dir")) cfg.output_dir = *v;
    s.get("jobs", &cfg.jobs);
    s.get("kde_bandwidth", &cfg.kde_bandwidth);
    s.check_unknown();
  }
  {
    Section s = section("analyses");
    AnalysisFlags& a = cfg.analyses;
    s.get("cka", &a.cka);
    s.get("separation", &a.separation);
    s.get("sparsity", &a.sparsity);
    s.get("calibration", &a.calibration);
    s.get("agreement", &a.agreement);
    s.get("avh", &a.avh);
    s.get("spectra", &a.spectra);
    s.get("transfer", &a.transfer);
    s.check_unknown();
  }
  {
    Section s = section("transfer");
    TransferConfig& t = cfg.transfer;
    s.get("extra_classes", &t.extra_classes);
    s.get("coarse_classes", &t.coarse_classes);
    s.get("test_fraction", &t.test_fraction);
    s.get("val_fraction", &t.val_fraction);
    s.get("max_iterations", &t.max_iterations);
    s.get("tolerance", &t.tolerance);
    s.check_unknown();
  }
  {
    Section s = section("sweep");
    s.get("peak_lr", &cfg.sweep.peak_lrs);
    s.get("weight_decay_product", &cfg.sweep.weight_decay_products);
    s.get_ints("seeds", &cfg.sweep.seeds, false);
    s.get("holdout_fraction", &cfg.sweep.holdout_fraction);
    s.check_unknown();
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.string());
}

std::string to_ini(const ExperimentConfig& c) {
  using internal::format_double;
  std::ostringstream o;
  const DatasetConfig& d = c.dataset;
  o << "[dataset]\n";
  switch (d.source) {
    case DatasetConfig::Source::kBlobs:
      o << "source = blobs\nn_per_class = " << d.n_per_class << "\nnum_classes = " << d.num_classes
        << "\nfeature_dim = " << d.feature_dim << "\nspread = " << format_double(d.spread) << "\nseed = " << d.seed
        << '\n';
      break;
    case DatasetConfig::Source::kCsv:
    case DatasetConfig::Source::kIdx:
      o << "source = " << (d.source == DatasetConfig::Source::kCsv ? "csv" : "idx") << "\npath = " << d.path.string()
        << '\n';
      if (d.labels_path) o << "labels_path = " << d.labels_path->string() << '\n';
      break;
  }
  o << "eval_fraction = " << format_double(d.eval_fraction) << "\nsplit_seed = " << d.split_seed << "\n\n";

  o << "[model]\nhidden = " << join_ints(c.hidden) << "\n\n";

  const TrainConfig& t = c.train;
  o << "[train]\nepochs = " << t.epochs << "\nbatch_size = " << t.batch_size
    << "\npeak_lr = " << format_double(t.peak_lr) << '\n';
  if (const auto* w = std::get_if<WarmupThenExponential>(&t.schedule)) {
    o << "schedule = warmup_exponential\nwarmup_epochs = " << format_double(w->warmup_epochs)
      << "\ndecay_per_epoch = " << format_double(w->decay_per_epoch) << '\n';
  } else {
    o << "schedule = cosine\n";
  }
  o << "momentum = " << format_double(t.nesterov_momentum)
    << "\nweight_decay_product = " << format_double(t.weight_decay_product) << '\n';
  if (t.ema_momentum) o << "ema_momentum = " << format_double(*t.ema_momentum) << '\n';
  o << '\n';

  o << "[experiment]\nseeds = " << join_ints(c.seeds) << "\nlosses = ";
  for (std::size_t i = 0; i < c.losses.size(); ++i) o << (i ? "; " : "") << to_string(c.losses[i]);
  o << "\noutput_dir = " << c.output_dir.string() << "\njobs = " << c.jobs
    << "\nkde_bandwidth = " << format_double(c.kde_bandwidth) << "\n\n";

  const AnalysisFlags& a = c.analyses;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[analyses]\ncka = " << b(a.cka) << "\nseparation = " << b(a.separation) << "\nsparsity = " << b(a.sparsity)
    << "\ncalibration = " << b(a.calibration) << "\nagreement = " << b(a.agreement) << "\navh = " << b(a.avh)
    << "\nspectra = " << b(a.spectra) << "\ntransfer = " << b(a.transfer) << "\n\n";

  const TransferConfig& tr = c.transfer;
  o << "[transfer]\nextra_classes = " << tr.extra_classes << "\ncoarse_classes = " << tr.coarse_classes
    << "\ntest_fraction = " << format_double(tr.test_fraction) << "\nval_fraction = " << format_double(tr.val_fraction)
    << "\nmax_iterations = " << tr.max_iterations << "\ntolerance = " << format_double(tr.tolerance) << "\n\n";

  o << "[sweep]\npeak_lr = " << join_doubles(c.sweep.peak_lrs)
    << "\nweight_decay_product = " << join_doubles(c.sweep.weight_decay_products)
    << "\nseeds = " << join_ints(c.sweep.seeds) << "\nholdout_fraction = " << format_double(c.sweep.holdout_fraction)
    << '\n';
  return o.str();
}

}  // namespace losslab
