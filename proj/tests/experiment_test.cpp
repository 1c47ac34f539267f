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

#include <gtest/gtest.h>

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>
#include <string>

#include "losslab/report.hpp"

namespace losslab {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config() {
  return parse_experiment_config(
      "[dataset]\nn_per_class = 30\nnum_classes = 4\nfeature_dim = 6\nspread = 1.0\n"
      "[model]\nhidden = 12\n"
      "[train]\nepochs = 4\nbatch_size = 16\npeak_lr = 0.05\n"
      "[experiment]\nseeds = 0, 1\nlosses = softmax; cosine_softmax(tau=0.1)@lr=0.1; sigmoid\n"
      "[analyses]\ntransfer = true\n"
      "[transfer]\nextra_classes = 4\ncoarse_classes = 2\nmax_iterations = 200\n");
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).string()] = {std::istreambuf_iterator<char>(in), {}};
  }
  return out;
}

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("losslab_experiment_" + std::to_string(::getpid()));
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }
  fs::path root_;
};

TEST_F(ExperimentTest, OutputsDoNotDependOnJobs) {
  const ExperimentConfig c = small_config();
  const auto a = run_experiment(c, root_ / "j1", 1);
  const auto b = run_experiment(c, root_ / "j2", 2);
  ASSERT_EQ(a.size(), 6u);
  for (const auto& o : a) EXPECT_FALSE(o.error.has_value()) << *o.error;
  write_full_report(c, root_ / "j1", 1);
  write_full_report(c, root_ / "j2", 2);
  const auto ta = tree_contents(root_ / "j1");
  const auto tb = tree_contents(root_ / "j2");
  EXPECT_EQ(ta.size(), tb.size());
  for (const auto& [name, bytes] : ta) {
    ASSERT_TRUE(tb.count(name)) << name;
    EXPECT_TRUE(tb.at(name) == bytes) << name;
  }
  for (const char* f : {"report/accuracy.csv", "report/separation.csv", "report/cka_penultimate.csv",
                        "report/calibration.csv", "report/agreement_summary.csv", "report/transfer.csv",
                        "report/report.md", "runs/softmax__seed0/features.dump",
                        "runs/cosine_softmax_tau-0.1_lr-0.1__seed1/predictions.csv"})
    EXPECT_TRUE(ta.count(f)) << f;
}

TEST_F(ExperimentTest, PlanOrderAndDirectoryNames) {
  const auto plan = plan_runs(small_config());
  ASSERT_EQ(plan.size(), 6u);
  EXPECT_EQ(run_dir_name(plan[0]), "softmax__seed0");
  EXPECT_EQ(run_dir_name(plan[1]), "softmax__seed1");
  EXPECT_EQ(run_dir_name(plan[3]), "cosine_softmax_tau-0.1_lr-0.1__seed1");
}

TEST_F(ExperimentTest, TransferDataIsDisjointFromTraining) {
  const ExperimentData d = load_experiment_data(small_config());
  ASSERT_TRUE(d.transfer_train && d.transfer_test);
  EXPECT_EQ(d.train.size() + d.eval.size(), 120u);
  EXPECT_EQ(d.transfer_train->num_classes, 2);
  EXPECT_EQ(d.transfer_train->size() + d.transfer_test->size(), 120u);
}

TEST_F(ExperimentTest, SweepPicksBestMean) {
  ExperimentConfig c = small_config();
  c.losses.resize(1);
  c.sweep.peak_lrs = {1e-4, 0.1};
  std::vector<SweepPoint> points;
  const auto choice = run_sweep(c, root_ / "sweep", 1, &points);
  ASSERT_EQ(choice.size(), 1u);
  EXPECT_EQ(points.size(), 2u);
  EXPECT_EQ(*choice[0].run.peak_lr, 0.1);
  EXPECT_TRUE(fs::exists(root_ / "sweep" / "sweep.csv"));
  EXPECT_TRUE(fs::exists(root_ / "sweep" / "sweep_best.txt"));
}

TEST(ParallelFor, VisitsEveryIndexAndRethrows) {
  std::atomic<int> sum{0};
  parallel_for(100, 3, [&](std::size_t i) { sum += static_cast<int>(i); });
  EXPECT_EQ(sum.load(), 4950);
  EXPECT_THROW(parallel_for(10, 2,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(MeanStderr, SampleStandardError) {
  const MeanStderr m = mean_stderr({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.stderr_, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(m.n, 4u);
}

}  // namespace
}  // namespace losslab
