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

#include "losslab/losses.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <random>

#include "text_util.hpp"

namespace losslab {

namespace {

using internal::format_double;
using internal::Overloaded;

void check_logits(const Vector& logits, int target, int min_classes) {
  if (logits.size() < min_classes) {
    throw InvalidInput("need at least " + std::to_string(min_classes) + " logits, got " +
                       std::to_string(logits.size()));
  }
  if (!logits.allFinite()) throw InvalidInput("non-finite logits");
  if (target < 0 || target >= logits.size()) {
    throw InvalidInput("target " + std::to_string(target) + " outside [0, " +
                       std::to_string(logits.size()) + ")");
  }
}

void check_features(const FinalLayer& layer, const Vector& features) {
  validate_layer(layer);
  if (features.size() != layer.weights.cols()) {
    throw ShapeMismatch("feature length " + std::to_string(features.size()) +
                        " does not match layer input " + std::to_string(layer.weights.cols()));
  }
  if (!features.allFinite()) throw InvalidInput("non-finite features");
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Pieces shared by the softmax family. `log_norm` is
// log(sum_k exp(l_k - max(l))), so the cross-entropy is
// log_norm + (max(l) - l_t) with no cancellation.
struct SoftmaxParts {
  double max_logit;
  double log_norm;
  Vector probs;
};

SoftmaxParts softmax_parts(const Vector& logits) {
  Eigen::Index arg = 0;
  double m = logits.maxCoeff(&arg);
  Vector e = (logits.array() - m).exp().matrix();
  // Summing the non-maximal terms separately keeps log1p accurate when the
  // maximal logit dominates.
  double rest = 0.0;
  for (Eigen::Index k = 0; k < e.size(); ++k)
    if (k != arg) rest += e[k];
  return SoftmaxParts{m, std::log1p(rest), e / (1.0 + rest)};
}

struct CosineForward {
  Vector x_hat;
  Matrix w_hat;
  double x_norm_inv = 0.0;
  Vector row_norms;
  Vector sims;
  Vector logits;
};

CosineForward cosine_forward(const FinalLayer& layer, const Vector& features,
                             double temperature) {
  // A zero feature vector (a dead ReLU example) has similarity 0 with every
  // class and receives no feature gradient.
  double xn = features.norm();
  CosineForward f;
  f.x_norm_inv = xn > kNormEpsilon ? 1.0 / xn : 0.0;
  f.x_hat = features * f.x_norm_inv;
  f.row_norms = layer.weights.rowwise().norm();
  for (Eigen::Index k = 0; k < f.row_norms.size(); ++k) {
    if (f.row_norms[k] <= kNormEpsilon) {
      throw DegenerateInput("cosine softmax: weight row " + std::to_string(k) + " has zero norm");
    }
  }
  f.w_hat = f.row_norms.cwiseInverse().asDiagonal() * layer.weights;
  f.sims = f.w_hat * f.x_hat;
  f.logits = f.sims / temperature + layer.bias;
  return f;
}

// Back-propagates a gradient on the cosine logits to W, b and x.
void cosine_backward(const CosineForward& f, const Vector& grad_logits, double temperature,
                     Matrix* grad_w, Vector* grad_b, Vector* grad_x) {
  Vector g = grad_logits / temperature;  // gradient on the similarities
  // d sim_k / d x = (w_hat_k - sim_k x_hat) / ||x||
  *grad_x = (f.w_hat.transpose() * g - g.dot(f.sims) * f.x_hat) * f.x_norm_inv;
  // d sim_k / d W_k = (x_hat - sim_k w_hat_k) / ||W_k||
  Matrix gw = g * f.x_hat.transpose();
  gw -= (g.cwiseProduct(f.sims)).asDiagonal() * f.w_hat;
  *grad_w = f.row_norms.cwiseInverse().asDiagonal() * gw;
  *grad_b = grad_logits;
}

}  // namespace

void validate_layer(const FinalLayer& layer) {
  if (layer.weights.rows() < 1) throw ShapeMismatch("final layer has no classes");
  if (layer.bias.size() != layer.weights.rows()) {
    throw ShapeMismatch("bias length " + std::to_string(layer.bias.size()) +
                        " does not match " + std::to_string(layer.weights.rows()) + " classes");
  }
  if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
    throw InvalidInput("final layer has non-finite entries");
  }
}

void LossSpec::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidHyperparameter(what);
  };
  std::visit(Overloaded{
                 [](const Softmax&) {},
                 [](const Sigmoid&) {},
                 [&](const LabelSmoothing& k) {
                   check(k.alpha >= 0.0 && k.alpha < 1.0, "label smoothing alpha must be in [0, 1)");
                 },
                 [&](const Dropout& k) {
                   check(k.keep_prob > 0.0 && k.keep_prob <= 1.0,
                         "dropout keep probability must be in (0, 1]");
                 },
                 [&](const ExtraFinalL2& k) {
                   check(k.lambda >= 0.0, "final-layer L2 lambda must be >= 0");
                 },
                 [&](const LogitPenalty& k) { check(k.beta >= 0.0, "logit penalty beta must be >= 0"); },
                 [&](const LogitNorm& k) { check(k.temperature > 0.0, "temperature must be > 0"); },
                 [&](const CosineSoftmax& k) { check(k.temperature > 0.0, "temperature must be > 0"); },
                 [&](const SquaredError& k) {
                   check(k.kappa > 0.0, "squared error kappa must be > 0");
                   check(k.loss_scale > 0.0, "squared error loss scale must be > 0");
                   check(std::isfinite(k.target_magnitude), "squared error M must be finite");
                 },
             },
             kind);
  for (const Penalty& p : extra_penalties) {
    std::visit(Overloaded{
                   [&](const LogitPenalty& k) { check(k.beta >= 0.0, "logit penalty beta must be >= 0"); },
                   [&](const ExtraFinalL2& k) { check(k.lambda >= 0.0, "final-layer L2 lambda must be >= 0"); },
               },
               p);
  }
}

std::string kind_name(const LossKind& kind) {
  return std::visit(Overloaded{
                        [](const Softmax&) { return std::string("softmax"); },
                        [](const LabelSmoothing&) { return std::string("label_smoothing"); },
                        [](const Dropout&) { return std::string("dropout"); },
                        [](const ExtraFinalL2&) { return std::string("extra_l2"); },
                        [](const LogitPenalty&) { return std::string("logit_penalty"); },
                        [](const LogitNorm&) { return std::string("logit_norm"); },
                        [](const CosineSoftmax&) { return std::string("cosine_softmax"); },
                        [](const Sigmoid&) { return std::string("sigmoid"); },
                        [](const SquaredError&) { return std::string("squared_error"); },
                    },
                    kind);
}

std::string to_string(const LossSpec& spec) {
  auto term = [](const LossKind& kind) {
    std::string name = kind_name(kind);
    std::string args = std::visit(
        Overloaded{
            [](const Softmax&) { return std::string(); },
            [](const Sigmoid&) { return std::string(); },
            [](const LabelSmoothing& k) { return "alpha=" + format_double(k.alpha); },
            [](const Dropout& k) { return "rho=" + format_double(k.keep_prob); },
            [](const ExtraFinalL2& k) { return "lambda=" + format_double(k.lambda); },
            [](const LogitPenalty& k) { return "beta=" + format_double(k.beta); },
            [](const LogitNorm& k) { return "tau=" + format_double(k.temperature); },
            [](const CosineSoftmax& k) { return "tau=" + format_double(k.temperature); },
            [](const SquaredError& k) {
              return "kappa=" + format_double(k.kappa) + ",M=" + format_double(k.target_magnitude) +
                     ",scale=" + format_double(k.loss_scale);
            },
        },
        kind);
    return args.empty() ? name : name + "(" + args + ")";
  };
  std::string out = term(spec.kind);
  for (const Penalty& p : spec.extra_penalties) {
    out += "+";
    out += std::visit([&](const auto& k) { return term(LossKind(k)); }, p);
  }
  return out;
}

LossSpec parse_loss_spec(std::string_view text) {
  auto fail = [&](const std::string& why) -> InvalidInput {
    return InvalidInput("bad loss spec '" + std::string(text) + "': " + why);
  };
  auto strip = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
  };

  std::vector<std::string_view> terms;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '(') ++depth;
    if (text[i] == ')') --depth;
    if (text[i] == '+' && depth == 0) {
      terms.push_back(strip(text.substr(start, i - start)));
      start = i + 1;
    }
  }
  terms.push_back(strip(text.substr(start)));

  auto parse_term = [&](std::string_view t) -> LossKind {
    std::string name;
    std::map<std::string, double> args;
    auto open = t.find('(');
    if (open == std::string_view::npos) {
      name = std::string(t);
    } else {
      if (t.back() != ')') throw fail("missing ')'");
      name = std::string(strip(t.substr(0, open)));
      std::string_view body = t.substr(open + 1, t.size() - open - 2);
      while (!body.empty()) {
        auto comma = body.find(',');
        std::string_view kv = strip(body.substr(0, comma));
        auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw fail("expected key=value");
        std::string key(strip(kv.substr(0, eq)));
        std::string_view val = strip(kv.substr(eq + 1));
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
        if (ec != std::errc() || ptr != val.data() + val.size()) throw fail("bad number for " + key);
        args[key] = v;
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
      }
    }
    auto take = [&](std::initializer_list<const char*> keys, std::optional<double> fallback) {
      for (const char* k : keys) {
        auto it = args.find(k);
        if (it != args.end()) {
          double v = it->second;
          args.erase(it);
          return v;
        }
      }
      if (!fallback) throw fail(name + " needs " + *keys.begin());
      return *fallback;
    };
    LossKind kind;
    if (name == "softmax") kind = Softmax{};
    else if (name == "sigmoid") kind = Sigmoid{};
    else if (name == "label_smoothing") kind = LabelSmoothing{take({"alpha"}, std::nullopt)};
    else if (name == "dropout") kind = Dropout{take({"rho", "keep_prob"}, std::nullopt)};
    else if (name == "extra_l2") kind = ExtraFinalL2{take({"lambda"}, std::nullopt)};
    else if (name == "logit_penalty") kind = LogitPenalty{take({"beta"}, std::nullopt)};
    else if (name == "logit_norm") kind = LogitNorm{take({"tau", "temperature"}, std::nullopt)};
    else if (name == "cosine_softmax") kind = CosineSoftmax{take({"tau", "temperature"}, std::nullopt)};
    else if (name == "squared_error") {
      SquaredError se;
      se.kappa = take({"kappa"}, 1.0);
      se.target_magnitude = take({"M", "target_magnitude"}, 1.0);
      se.loss_scale = take({"scale", "loss_scale"}, 1.0);
      kind = se;
    } else {
      throw fail("unknown loss '" + name + "'");
    }
    if (!args.empty()) throw fail("unknown parameter '" + args.begin()->first + "' for " + name);
    return kind;
  };

  LossSpec spec;
  spec.kind = parse_term(terms.front());
  for (std::size_t i = 1; i < terms.size(); ++i) {
    LossKind k = parse_term(terms[i]);
    if (auto* lp = std::get_if<LogitPenalty>(&k)) spec.extra_penalties.push_back(*lp);
    else if (auto* l2 = std::get_if<ExtraFinalL2>(&k)) spec.extra_penalties.push_back(*l2);
    else throw fail("only logit_penalty and extra_l2 can be added to a base loss");
  }
  spec.validate();
  return spec;
}

bool is_sigmoid(const LossSpec& spec) { return std::holds_alternative<Sigmoid>(spec.kind); }

// ---- Single-example losses --------------------------------------------------

double logsumexp(const Vector& logits) {
  SoftmaxParts p = softmax_parts(logits);
  return p.max_logit + p.log_norm;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Vector softmax(const Vector& logits) { return softmax_parts(logits).probs; }

LossResult softmax_xent(const Vector& logits, int target) {
  check_logits(logits, target, 2);
  SoftmaxParts p = softmax_parts(logits);
  LossResult r;
  r.value = p.log_norm + (p.max_logit - logits[target]);
  r.grad_logits = std::move(p.probs);
  r.grad_logits[target] -= 1.0;
  return r;
}

LossResult label_smoothing_xent(const Vector& logits, int target, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw InvalidHyperparameter("label smoothing alpha must be in [0, 1)");
  }
  check_logits(logits, target, 2);
  SoftmaxParts p = softmax_parts(logits);
  const double k = static_cast<double>(logits.size());
  const double c = alpha / ((1.0 - alpha) * k);
  // -l_t + lse/(1-a) - a/((1-a)K) sum l  ==  (lse - l_t) + c * sum_k (lse - l_k)
  double spread = 0.0;
  for (Eigen::Index j = 0; j < logits.size(); ++j) spread += p.log_norm + (p.max_logit - logits[j]);
  LossResult r;
  r.value = p.log_norm + (p.max_logit - logits[target]) + c * spread;
  r.grad_logits = p.probs / (1.0 - alpha) - Vector::Constant(logits.size(), c);
  r.grad_logits[target] -= 1.0;
  return r;
}

LossResult dropout_xent(const FinalLayer& layer, const Vector& features, int target,
                        double keep_prob, int n_samples, std::uint64_t seed) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw InvalidHyperparameter("dropout keep probability must be in (0, 1]");
  }
  if (n_samples < 1) throw InvalidHyperparameter("dropout needs at least one sample");
  check_features(layer, features);

  const Eigen::Index k = layer.weights.rows();
  const Eigen::Index m = layer.weights.cols();
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(keep_prob);

  LossResult r;
  r.grad_logits = Vector::Zero(k);
  r.grad_weights = Matrix::Zero(k, m);
  r.grad_bias = Vector::Zero(k);
  r.grad_features = Vector::Zero(m);
  Vector scale(m);
  for (int s = 0; s < n_samples; ++s) {
    for (Eigen::Index i = 0; i < m; ++i) scale[i] = keep(rng) ? 1.0 / keep_prob : 0.0;
    Vector dropped = features.cwiseProduct(scale);
    LossResult base = softmax_xent(layer.logits(dropped), target);
    r.value += base.value;
    r.grad_logits += base.grad_logits;
    *r.grad_weights += base.grad_logits * dropped.transpose();
    *r.grad_bias += base.grad_logits;
    *r.grad_features += (layer.weights.transpose() * base.grad_logits).cwiseProduct(scale);
  }
  if (n_samples > 1) {
    const double inv = 1.0 / n_samples;
    r.value *= inv;
    r.grad_logits *= inv;
    *r.grad_weights *= inv;
    *r.grad_bias *= inv;
    *r.grad_features *= inv;
  }
  return r;
}

LossResult extra_final_l2_penalty(const FinalLayer& layer, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidHyperparameter("final-layer L2 lambda must be >= 0");
  validate_layer(layer);
  LossResult r;
  r.value = 0.5 * lambda * layer.weights.squaredNorm();
  r.grad_logits = Vector::Zero(layer.weights.rows());
  r.grad_weights = lambda * layer.weights;
  r.grad_bias = Vector::Zero(layer.weights.rows());
  r.grad_features = Vector::Zero(layer.weights.cols());
  return r;
}

LossResult logit_penalty_xent(const Vector& logits, int target, double beta) {
  if (!(beta >= 0.0)) throw InvalidHyperparameter("logit penalty beta must be >= 0");
  LossResult r = softmax_xent(logits, target);
  r.value += beta * logits.squaredNorm();
  r.grad_logits += 2.0 * beta * logits;
  return r;
}

LossResult logit_norm_xent(const Vector& logits, int target, double temperature) {
  if (!(temperature > 0.0)) throw InvalidHyperparameter("temperature must be > 0");
  check_logits(logits, target, 2);
  const double norm = logits.norm();
  if (norm <= kNormEpsilon) throw DegenerateInput("logit normalization: zero-norm logits");
  Vector unit = logits / norm;
  LossResult inner = softmax_xent(unit / temperature, target);
  LossResult r;
  r.value = inner.value;
  // d(u/tau)/dl = (I - u u^T) / (tau ||l||)
  r.grad_logits = (inner.grad_logits - unit * unit.dot(inner.grad_logits)) / (temperature * norm);
  return r;
}

LossResult cosine_softmax_xent(const FinalLayer& layer, const Vector& features, int target,
                               double temperature) {
  if (!(temperature > 0.0)) throw InvalidHyperparameter("temperature must be > 0");
  check_features(layer, features);
  CosineForward f = cosine_forward(layer, features, temperature);
  LossResult inner = softmax_xent(f.logits, target);
  LossResult r;
  r.value = inner.value;
  Matrix gw;
  Vector gb, gx;
  cosine_backward(f, inner.grad_logits, temperature, &gw, &gb, &gx);
  r.grad_logits = std::move(inner.grad_logits);
  r.grad_weights = std::move(gw);
  r.grad_bias = std::move(gb);
  r.grad_features = std::move(gx);
  return r;
}

LossResult sigmoid_xent(const Vector& logits, int target) {
  check_logits(logits, target, 1);
  LossResult r;
  r.grad_logits.resize(logits.size());
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (k == target) {
      // softplus(l) - l == softplus(-l); sigma(l) - 1 == -sigma(-l)
      r.value += softplus(-logits[k]);
      r.grad_logits[k] = -sigmoid(-logits[k]);
    } else {
      r.value += softplus(logits[k]);
      r.grad_logits[k] = sigmoid(logits[k]);
    }
  }
  return r;
}

LossResult squared_error(const Vector& logits, int target, double kappa,
                         double target_magnitude, double loss_scale) {
  if (!(kappa > 0.0)) throw InvalidHyperparameter("squared error kappa must be > 0");
  if (!(loss_scale > 0.0)) throw InvalidHyperparameter("squared error loss scale must be > 0");
  check_logits(logits, target, 1);
  const double c = loss_scale / static_cast<double>(logits.size());
  LossResult r;
  r.grad_logits = 2.0 * c * logits;
  const double diff = logits[target] - target_magnitude;
  double sum = kappa * diff * diff;
  for (Eigen::Index k = 0; k < logits.size(); ++k)
    if (k != target) sum += logits[k] * logits[k];
  r.value = c * sum;
  r.grad_logits[target] = 2.0 * c * kappa * diff;
  return r;
}

double sigmoid_bias_init(int num_classes) {
  if (num_classes < 1) throw InvalidInput("sigmoid bias init needs K >= 1");
  return -std::log(static_cast<double>(num_classes));
}

// ---- Composition ------------------------------------------------------------

LossResult compose_loss(const LossSpec& spec, const FinalLayer& layer, const Vector& features,
                        int target, std::uint64_t seed) {
  spec.validate();
  check_features(layer, features);
  const Eigen::Index k = layer.weights.rows();
  const Eigen::Index m = layer.weights.cols();

  // Gradient flowing through l = W x + b, plus contributions that bypass it.
  Vector raw_grad = Vector::Zero(k);
  Matrix direct_w = Matrix::Zero(k, m);
  Vector direct_b = Vector::Zero(k);
  Vector direct_x = Vector::Zero(m);

  LossResult out;
  const Vector raw_logits = layer.logits(features);

  auto take_raw = [&](LossResult r) {
    out.value = r.value;
    raw_grad += r.grad_logits;
    out.grad_logits = std::move(r.grad_logits);
  };

  std::visit(
      Overloaded{
          [&](const Softmax&) { take_raw(softmax_xent(raw_logits, target)); },
          [&](const LabelSmoothing& p) { take_raw(label_smoothing_xent(raw_logits, target, p.alpha)); },
          [&](const ExtraFinalL2& p) {
            take_raw(softmax_xent(raw_logits, target));
            LossResult pen = extra_final_l2_penalty(layer, p.lambda);
            out.value += pen.value;
            direct_w += *pen.grad_weights;
          },
          [&](const LogitPenalty& p) { take_raw(logit_penalty_xent(raw_logits, target, p.beta)); },
          [&](const LogitNorm& p) { take_raw(logit_norm_xent(raw_logits, target, p.temperature)); },
          [&](const Sigmoid&) { take_raw(sigmoid_xent(raw_logits, target)); },
          [&](const SquaredError& p) {
            take_raw(squared_error(raw_logits, target, p.kappa, p.target_magnitude, p.loss_scale));
          },
          [&](const Dropout& p) {
            LossResult r = dropout_xent(layer, features, target, p.keep_prob, 1, seed);
            out.value = r.value;
            out.grad_logits = std::move(r.grad_logits);
            direct_w += *r.grad_weights;
            direct_b += *r.grad_bias;
            direct_x += *r.grad_features;
          },
          [&](const CosineSoftmax& p) {
            // Logit penalties act on the cosine logits, so they are folded in
            // before the single backward pass.
            CosineForward f = cosine_forward(layer, features, p.temperature);
            LossResult r = softmax_xent(f.logits, target);
            for (const Penalty& pen : spec.extra_penalties) {
              if (const auto* lp = std::get_if<LogitPenalty>(&pen)) {
                r.value += lp->beta * f.logits.squaredNorm();
                r.grad_logits += 2.0 * lp->beta * f.logits;
              }
            }
            Matrix gw;
            Vector gb, gx;
            cosine_backward(f, r.grad_logits, p.temperature, &gw, &gb, &gx);
            out.value = r.value;
            out.grad_logits = std::move(r.grad_logits);
            direct_w += gw;
            direct_b += gb;
            direct_x += gx;
          },
      },
      spec.kind);

  const bool cosine = std::holds_alternative<CosineSoftmax>(spec.kind);
  for (const Penalty& pen : spec.extra_penalties) {
    if (const auto* lp = std::get_if<LogitPenalty>(&pen)) {
      if (cosine) continue;
      out.value += lp->beta * raw_logits.squaredNorm();
      raw_grad += 2.0 * lp->beta * raw_logits;
      out.grad_logits += 2.0 * lp->beta * raw_logits;
    } else {
      LossResult r = extra_final_l2_penalty(layer, std::get<ExtraFinalL2>(pen).lambda);
      out.value += r.value;
      direct_w += *r.grad_weights;
    }
  }

  out.grad_weights = raw_grad * features.transpose() + direct_w;
  out.grad_bias = raw_grad + direct_b;
  out.grad_features = layer.weights.transpose() * raw_grad + direct_x;
  return out;
}

Matrix prediction_logits(const LossSpec& spec, const FinalLayer& layer, const Matrix& features) {
  validate_layer(layer);
  if (features.cols() != layer.weights.cols()) {
    throw ShapeMismatch("feature width " + std::to_string(features.cols()) +
                        " does not match layer input " + std::to_string(layer.weights.cols()));
  }
  if (const auto* cs = std::get_if<CosineSoftmax>(&spec.kind)) {
    Vector row_norms = layer.weights.rowwise().norm();
    if ((row_norms.array() <= kNormEpsilon).any()) {
      throw DegenerateInput("cosine logits: zero-norm weight row");
    }
    Vector x_inv = features.rowwise().norm().unaryExpr([](double v) { return v > kNormEpsilon ? 1.0 / v : 0.0; });
    Matrix sims = x_inv.asDiagonal() * features * layer.weights.transpose() *
                  row_norms.cwiseInverse().asDiagonal();
    return (sims / cs->temperature).rowwise() + layer.bias.transpose();
  }
  Matrix logits = (features * layer.weights.transpose()).rowwise() + layer.bias.transpose();
  if (const auto* ln = std::get_if<LogitNorm>(&spec.kind)) {
    Vector norms = logits.rowwise().norm();
    if ((norms.array() <= kNormEpsilon).any()) {
      throw DegenerateInput("logit normalization: zero-norm logits");
    }
    logits = (norms * ln->temperature).cwiseInverse().asDiagonal() * logits;
  }
  return logits;
}

BatchLossResult evaluate_batch(const LossSpec& spec, const FinalLayer& layer,
                               const Matrix& features, const Labels& labels,
                               std::uint64_t seed) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeMismatch("evaluate_batch: rows and labels differ");
  }
  if (labels.empty()) throw InvalidInput("evaluate_batch: empty batch");
  const Eigen::Index n = features.rows();
  BatchLossResult out;
  out.grad_weights = Matrix::Zero(layer.weights.rows(), layer.weights.cols());
  out.grad_bias = Vector::Zero(layer.weights.rows());
  out.grad_features.resize(n, features.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    LossResult r = compose_loss(spec, layer, features.row(i).transpose(), labels[i],
                                mix_seed(seed, static_cast<std::uint64_t>(i)));
    out.value += r.value;
    out.grad_weights += *r.grad_weights;
    out.grad_bias += *r.grad_bias;
    out.grad_features.row(i) = r.grad_features->transpose();
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.value *= inv;
  out.grad_weights *= inv;
  out.grad_bias *= inv;
  return out;
}

}  // namespace losslab
