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

#include "losslab/repr.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <random>

#include "oracles.hpp"

namespace losslab {
namespace {

TEST(Cka, MatchesGramForm) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = oracle::random_matrix(rng, 30, 5);
    const Matrix y = oracle::random_matrix(rng, 30, 8) + 0.3 * Matrix::Ones(30, 8);
    EXPECT_NEAR(linear_cka(x, y), oracle::gram_cka(x, y), 1e-10);
  }
}

TEST(Cka, Invariances) {
  std::mt19937_64 rng(2);
  const Matrix x = oracle::random_matrix(rng, 40, 6);
  const Matrix y = oracle::random_matrix(rng, 40, 4);
  const Eigen::HouseholderQR<Matrix> qr(oracle::random_matrix(rng, 6, 6));
  const Matrix q = qr.householderQ();
  EXPECT_NEAR(linear_cka(x * q, y), linear_cka(x, y), 1e-12);
  EXPECT_NEAR(linear_cka(3.5 * x, y), linear_cka(x, y), 1e-12);
  EXPECT_NEAR(linear_cka(x, x), 1.0, 1e-12);
  EXPECT_THROW(linear_cka(Matrix::Ones(40, 3), y), DegenerateInput);
  EXPECT_THROW(linear_cka(x, oracle::random_matrix(rng, 39, 4)), ShapeMismatch);
}

class SeparationTest : public ::testing::TestWithParam<std::pair<SeparationIndex, oracle::Distance>> {};

TEST_P(SeparationTest, MatchesDoubleLoop) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    // Unbalanced classes.
    Labels y;
    for (int c = 0; c < 4; ++c)
      for (int i = 0; i < 3 + 2 * c + t % 3; ++i) y.push_back(c);
    std::shuffle(y.begin(), y.end(), rng);
    Matrix x = oracle::random_matrix(rng, static_cast<Eigen::Index>(y.size()), 5);
    for (std::size_t i = 0; i < y.size(); ++i) x(static_cast<Eigen::Index>(i), y[i]) += 2.0;
    EXPECT_NEAR(class_separation_r2(x, y, GetParam().first), oracle::r2_double_loop(x, y, GetParam().second), 1e-10);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Indexes, SeparationTest,
    ::testing::Values(std::pair{SeparationIndex::kCosine, oracle::Distance::kCosine},
                      std::pair{SeparationIndex::kCosineMeanSubtracted, oracle::Distance::kCosineMeanSubtracted},
                      std::pair{SeparationIndex::kEuclidean, oracle::Distance::kEuclidean}));

TEST(Separation, PerfectAndNone) {
  Matrix x(4, 2);
  x << 1, 0, 2, 0, 0, 1, 0, 3;
  EXPECT_NEAR(class_separation_r2(x, {0, 0, 1, 1}, SeparationIndex::kCosine), 1.0, 1e-15);
  EXPECT_THROW(class_separation_r2(x, {0, 0, 2, 2}, SeparationIndex::kCosine), InvalidInput);
  x.row(0).setZero();
  EXPECT_THROW(class_separation_r2(x, {0, 0, 1, 1}, SeparationIndex::kCosine), DegenerateInput);
  EXPECT_NO_THROW(class_separation_r2(x, {0, 0, 1, 1}, SeparationIndex::kEuclidean));
}

// On balanced data the cosine R² equals the one-hot alignment of the
// centered cosine Gram matrix normalized by its trace:
//   R² = K <Kc, L> / (n tr(Kc)).
TEST(Separation, EqualsTraceNormalizedLabelAlignment) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const Labels y = oracle::balanced_labels(rng, 6, 4);
    Matrix x = oracle::random_matrix(rng, 24, 5);
    for (std::size_t i = 0; i < y.size(); ++i) x(static_cast<Eigen::Index>(i), y[i]) += 1.5;
    Matrix xn = x;
    for (Eigen::Index i = 0; i < xn.rows(); ++i) xn.row(i).normalize();
    const Eigen::Index n = 24;
    const Matrix h = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
    const Matrix kc = h * xn * xn.transpose() * h;
    double aligned = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (y[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(j)]) aligned += kc(i, j);
    EXPECT_NEAR(class_separation_r2(x, y, SeparationIndex::kCosine), 4.0 * aligned / (n * kc.trace()), 1e-12);
  }
}

TEST(Avh, MatchesLoop) {
  std::mt19937_64 rng(5);
  FinalLayer layer{oracle::random_matrix(rng, 4, 6), Vector::Zero(4)};
  const Matrix x = oracle::random_matrix(rng, 25, 6);
  Labels y;
  for (int i = 0; i < 25; ++i) y.push_back(i % 4);
  const Vector fast = angular_visual_hardness(layer, x, y);
  const Vector slow = oracle::avh_loop(layer.weights, x, y);
  EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE((fast.array() >= 0.0).all() && (fast.array() <= 1.0).all());
}

TEST(Sparsity, CountsPositiveEntries) {
  Matrix a(2, 2);
  a << 0, 1, 2, -1;
  const auto p = sparsity_profile({a, Matrix::Ones(3, 3)});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 1.0);
  EXPECT_THROW(sparsity_profile({}), InvalidInput);
}

TEST(Spectrum, MatchesEigenvaluesOfGram) {
  std::mt19937_64 rng(6);
  const Matrix x = oracle::random_matrix(rng, 30, 5);
  const Vector s = singular_spectrum(x, SpectrumMode::kWeights);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(x.transpose() * x);
  Vector expected = eig.eigenvalues().reverse().cwiseSqrt();
  EXPECT_LT((s - expected).cwiseAbs().maxCoeff(), 1e-10);

  const Vector centered = singular_spectrum(x.rowwise() + Eigen::RowVectorXd::Constant(5, 7.0), SpectrumMode::kActivations);
  const Matrix xc = x.rowwise() - x.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Matrix> eig_c(xc.transpose() * xc);
  EXPECT_LT((centered - eig_c.eigenvalues().reverse().cwiseSqrt()).cwiseAbs().maxCoeff(), 1e-9);

  Labels y;
  for (int i = 0; i < 30; ++i) y.push_back(i % 3);
  const Vector centroid = singular_spectrum(x, SpectrumMode::kClassCentroids, &y);
  EXPECT_EQ(centroid.size(), 3);
  EXPECT_LT(centroid[2], 1e-12);  // three centered centroids span at most two dimensions
  EXPECT_THROW(singular_spectrum(x, SpectrumMode::kClassCentroids), InvalidInput);
}

TEST(Pairwise, SplitsPairsByLabel) {
  std::mt19937_64 rng(7);
  const Matrix x = oracle::random_matrix(rng, 9, 3);
  const Labels y = {0, 1, 0, 2, 1, 0, 2, 2, 1};
  const PairwiseDistances d = pairwise_cosine_distances(x, y);
  std::vector<double> within, between;
  for (Eigen::Index i = 0; i < 9; ++i)
    for (Eigen::Index j = i + 1; j < 9; ++j) {
      const double v = 1.0 - x.row(i).dot(x.row(j)) / (x.row(i).norm() * x.row(j).norm());
      (y[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(j)] ? within : between).push_back(v);
    }
  ASSERT_EQ(d.within.size(), within.size());
  ASSERT_EQ(d.between.size(), between.size());
  for (std::size_t i = 0; i < within.size(); ++i) EXPECT_NEAR(d.within[i], within[i], 1e-12);
  for (std::size_t i = 0; i < between.size(); ++i) EXPECT_NEAR(d.between[i], between[i], 1e-12);
}

TEST(Density, IntegratesToOne) {
  std::mt19937_64 rng(8);
  const Matrix x = oracle::random_matrix(rng, 60, 4);
  Labels y;
  for (int i = 0; i < 60; ++i) y.push_back(i % 3);
  const DensityCurves d = cosine_distance_density(x, y, 0.05);
  ASSERT_EQ(d.grid.size(), 512);
  const double h = d.grid[1] - d.grid[0];
  auto trapezoid = [&](const Vector& f) { return h * (f.sum() - 0.5 * (f[0] + f[f.size() - 1])); };
  EXPECT_NEAR(trapezoid(d.within), 1.0, 1e-3);
  EXPECT_NEAR(trapezoid(d.between), 1.0, 1e-3);
}

TEST(Density, PeaksAtPointMass) {
  const Vector f = kernel_density(std::vector<double>(10, 0.75), 0.0, 2.0, 0.05, 401);
  Eigen::Index arg = 0;
  f.maxCoeff(&arg);
  EXPECT_NEAR(2.0 * static_cast<double>(arg) / 400.0, 0.75, 1e-12);
  EXPECT_TRUE(kernel_density({}, 0.0, 2.0, 0.05, 16).isZero());
  EXPECT_THROW(kernel_density({1.0}, 0.0, 2.0, 0.0, 16), InvalidHyperparameter);
}

}  // namespace
}  // namespace losslab
