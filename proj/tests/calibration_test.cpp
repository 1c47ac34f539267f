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

#include "losslab/calibration.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"

namespace losslab {
namespace {

TEST(Probabilities, SoftmaxAndSigmoidRows) {
  Matrix l(2, 3);
  l << 1, 2, 3, -800, 0, 800;
  for (auto source : {ProbabilitySource::kSoftmax, ProbabilitySource::kSigmoidNormalized}) {
    const ProbabilityBatch p = probs_from_logits(l, source);
    EXPECT_TRUE(p.probs.allFinite());
    EXPECT_NEAR(p.probs.row(0).sum(), 1.0, 1e-15);
    EXPECT_NEAR(p.probs.row(1).sum(), 1.0, 1e-15);
  }
  const Matrix s = probs_from_logits(l, ProbabilitySource::kSigmoidNormalized).probs;
  const double a = 1.0 / (1.0 + std::exp(-1.0)), b = 1.0 / (1.0 + std::exp(-2.0)), c = 1.0 / (1.0 + std::exp(-3.0));
  EXPECT_NEAR(s(0, 0), a / (a + b + c), 1e-15);
  EXPECT_EQ(probability_source(parse_loss_spec("sigmoid")), ProbabilitySource::kSigmoidNormalized);
  EXPECT_EQ(probability_source(parse_loss_spec("cosine_softmax(tau=0.1)")), ProbabilitySource::kSoftmax);
}

TEST(TopK, TiesGoToLowerIndex) {
  Matrix l(3, 3);
  l << 1, 1, 0, 0, 2, 1, 5, 4, 3;
  EXPECT_DOUBLE_EQ(topk_accuracy(l, {1, 1, 2}, 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(topk_accuracy(l, {1, 1, 2}, 2), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(topk_accuracy(l, {1, 1, 2}, 3), 1.0);
}

TEST(Ece, HandComputed) {
  // Confidences 0.9 (right), 0.9 (wrong), 0.6 (right), 0.3 with K = 4 (wrong).
  Matrix p(4, 4);
  p << 0.9, 0.1, 0, 0,  //
      0.9, 0.1, 0, 0,   //
      0.2, 0.6, 0.2, 0, //
      0.3, 0.25, 0.25, 0.2;
  const CalibrationReport r = ece({p, ProbabilitySource::kSoftmax}, {0, 1, 1, 3}, 10);
  // Bin (0.8,0.9]: acc 0.5, conf 0.9; bin (0.5,0.6]: 1 vs 0.6; bin (0.2,0.3]: 0 vs 0.3.
  EXPECT_NEAR(r.ece, 0.5 * 0.4 + 0.25 * 0.4 + 0.25 * 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_NEAR(r.nll, -(std::log(0.9) + std::log(0.1) + std::log(0.6) + std::log(0.2)) / 4.0, 1e-12);
  ASSERT_EQ(r.bins.size(), 10u);
  EXPECT_EQ(r.bins[8].count, 2u);
  EXPECT_EQ(calibration_bin(0.0, 10), 0);
  EXPECT_EQ(calibration_bin(0.1, 10), 0);
  EXPECT_EQ(calibration_bin(1.0, 10), 9);
}

TEST(Ece, PredictsFromLogitsWhenProbabilitiesTie) {
  Matrix l(1, 3);
  l << 50, 60, -1;
  const ProbabilityBatch p = probs_from_logits(l, ProbabilitySource::kSigmoidNormalized);
  ASSERT_EQ(p.probs(0, 0), p.probs(0, 1));
  EXPECT_EQ(p.predicted, (Labels{1}));
  EXPECT_DOUBLE_EQ(ece(p, {1}, 15).accuracy, 1.0);
  EXPECT_DOUBLE_EQ(ece({p.probs, p.source}, {1}, 15).accuracy, 0.0);
}

TEST(Ece, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Matrix logits = oracle::random_matrix(rng, 200, 5, 2.0);
    std::uniform_int_distribution<int> cls(0, 4);
    Labels y(200);
    for (auto& v : y) v = cls(rng);
    const ProbabilityBatch p = probs_from_logits(logits, ProbabilitySource::kSoftmax);
    for (int bins : {1, 10, 15}) EXPECT_NEAR(ece(p, y, bins).ece, oracle::brute_force_ece(p.probs, y, bins), 1e-12);
  }
}

TEST(Temperature, KeepsTopOneAndLowersNll) {
  std::mt19937_64 rng(12);
  for (auto source : {ProbabilitySource::kSoftmax, ProbabilitySource::kSigmoidNormalized}) {
    Matrix logits = oracle::random_matrix(rng, 300, 6, 4.0);
    Labels y(300);
    std::uniform_int_distribution<int> cls(0, 5);
    for (Eigen::Index i = 0; i < 300; ++i) {
      Eigen::Index arg = 0;
      logits.row(i).maxCoeff(&arg);
      y[static_cast<std::size_t>(i)] = i % 3 == 0 ? cls(rng) : static_cast<int>(arg);
    }
    const TemperatureFit fit = fit_temperature(logits, y, source);
    EXPECT_LE(fit.after.nll, fit.before.nll + 1e-12);
    EXPECT_EQ(fit.after.accuracy, fit.before.accuracy);
    EXPECT_GT(fit.temperature, 1.0);  // overconfident logits
    ASSERT_TRUE(fit.after.temperature.has_value());
    EXPECT_EQ(argmax_rows(logits / fit.temperature), argmax_rows(logits));
  }
}

TEST(Agreement, Variants) {
  const Labels truth = {0, 1, 2, 0, 1};
  const Labels a = {0, 1, 1, 2, 1};
  const Labels b = {0, 2, 1, 1, 1};
  EXPECT_DOUBLE_EQ(*agreement(a, b, truth, AgreementVariant::kSameTop1), 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(*agreement(a, b, truth, AgreementVariant::kBothCorrectOrBothIncorrect), 4.0 / 5.0);
  EXPECT_DOUBLE_EQ(*agreement(a, b, truth, AgreementVariant::kAgreeOnMutualErrors), 1.0 / 2.0);
  EXPECT_FALSE(agreement(truth, truth, truth, AgreementVariant::kAgreeOnMutualErrors).has_value());
  for (auto v : {AgreementVariant::kSameTop1, AgreementVariant::kBothCorrectOrBothIncorrect,
                 AgreementVariant::kAgreeOnMutualErrors})
    EXPECT_EQ(parse_agreement_variant(to_string(v)), v);
  EXPECT_THROW(parse_agreement_variant("nope"), InvalidInput);
}

TEST(Agreement, MatrixIsSymmetricWithUnitDiagonal) {
  const Labels truth = {0, 1, 2, 0};
  const AgreementMatrix m =
      agreement_matrix({{0, 1, 2, 0}, {0, 1, 1, 0}, {1, 1, 2, 2}}, truth, AgreementVariant::kSameTop1);
  EXPECT_EQ(m.models.size(), 3u);
  EXPECT_TRUE(m.agree.isApprox(m.agree.transpose()));
  EXPECT_DOUBLE_EQ(m.agree(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.agree(1, 2), 0.25);
  const AgreementMatrix e = agreement_matrix({{0, 1, 2, 0}, {0, 1, 2, 0}}, truth, AgreementVariant::kAgreeOnMutualErrors);
  EXPECT_TRUE(std::isnan(e.agree(0, 1)));
  EXPECT_DOUBLE_EQ(agreement_distance(e)(0, 1), 1.0);
}

TEST(Linkage, MatchesNaiveRecomputation) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const int n = 3 + t % 8;
    const Matrix pts = oracle::random_matrix(rng, n, 2);
    Matrix d(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = (pts.row(i) - pts.row(j)).norm();
    const auto fast = linkage_dendrogram(d);
    const auto slow = oracle::naive_average_linkage(d);
    ASSERT_EQ(fast.size(), slow.size());
    for (std::size_t s = 0; s < fast.size(); ++s) {
      EXPECT_EQ(fast[s].a, slow[s].a);
      EXPECT_EQ(fast[s].b, slow[s].b);
      EXPECT_NEAR(fast[s].height, slow[s].height, 1e-12);
    }
    EXPECT_EQ(fast.back().size, n);
  }
}

TEST(Linkage, TiesBreakOnSmallestPair) {
  Matrix d = Matrix::Ones(4, 4) - Matrix::Identity(4, 4);
  const auto m = linkage_dendrogram(d);
  EXPECT_EQ(m[0].a, 0);
  EXPECT_EQ(m[0].b, 1);
  EXPECT_EQ(m[1].a, 2);
  EXPECT_EQ(m[1].b, 3);
  d(0, 1) = -1.0;
  EXPECT_THROW(linkage_dendrogram(d), InvalidInput);
}

TEST(Ensemble, ModalPrediction) {
  EXPECT_EQ(ensemble_modal({{0, 1, 2}, {1, 1, 0}, {1, 2, 2}}), (Labels{1, 1, 2}));
  EXPECT_EQ(ensemble_modal({{2, 0}, {1, 3}}), (Labels{1, 0}));
  EXPECT_THROW(ensemble_modal({}), InvalidInput);
}

TEST(PredictionFile, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "losslab_predictions_test.csv";
  write_predictions_csv(path, {2, 0, 1}, {0.5, 1.0 / 3.0, 0.999});
  const PredictionFile back = read_predictions_csv(path);
  EXPECT_EQ(back.predicted, (Labels{2, 0, 1}));
  EXPECT_EQ(back.confidence[1], 1.0 / 3.0);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace losslab
