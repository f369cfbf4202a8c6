#include <cmath>

#include <gtest/gtest.h>

#include "coopucb/bandit.hpp"

using namespace coopucb;

TEST(BanditModel, BenchmarkGaps) {
  const auto model = ten_arm_benchmark();
  EXPECT_EQ(model.arms(), 10u);
  EXPECT_EQ(model.best_arm(), 9u);
  EXPECT_EQ(model.sigma(), 30.0);
  const std::vector<double> expected{55, 45, 45, 35, 25, 25, 15, 5, 3, 0};
  EXPECT_EQ(model.gaps(), expected);
}

TEST(BanditModel, TiesPickLowestIndex) {
  const BanditModel model({1.0, 3.0, 3.0, 2.0}, 1.0);
  EXPECT_EQ(model.best_arm(), 1u);
  EXPECT_EQ(model.gap(1), 0.0);
  EXPECT_EQ(model.gap(2), 0.0);
  EXPECT_EQ(model.gap(3), 1.0);
}

TEST(BanditModel, Validation) {
  EXPECT_THROW(BanditModel({}, 1.0), ValidationError);
  EXPECT_THROW(BanditModel({1.0}, 0.0), ValidationError);
  EXPECT_THROW(BanditModel({1.0}, -2.0), ValidationError);
  EXPECT_NO_THROW(BanditModel({1.0}, 1.0));
}

TEST(SampleReward, DegenerateGaussian) {
  const BanditModel model({7.5, -2.0}, 1e-12);
  RunRng rng(3);
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(sample_reward(model, 0, rng), 7.5, 1e-9);
    EXPECT_NEAR(sample_reward(model, 1, rng), -2.0, 1e-9);
  }
}

TEST(SampleReward, BenchmarkMoments) {
  const auto model = ten_arm_benchmark();
  RunRng rng(12345);
  const int n = 10000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += sample_reward(model, 9, rng);
  EXPECT_NEAR(sum / n, 95.0, 3 * 30.0 / std::sqrt(double(n)));

  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = sample_reward(model, 0, rng);
    s += r;
    ss += r * r;
  }
  const double mean = s / n;
  const double sd = std::sqrt((ss - n * mean * mean) / (n - 1));
  EXPECT_NEAR(sd, 30.0, 0.05 * 30.0);
}

TEST(SampleReward, OutOfRange) {
  RunRng rng(1);
  EXPECT_THROW(sample_reward(ten_arm_benchmark(), 10, rng), std::out_of_range);
}

TEST(RunRng, SeedDeterminism) {
  RunRng a(99), b(99), c(100);
  const auto model = ten_arm_benchmark();
  bool differs = false;
  for (int i = 0; i < 50; ++i) {
    const double x = sample_reward(model, 3, a);
    EXPECT_EQ(x, sample_reward(model, 3, b));
    differs = differs || x != sample_reward(model, 3, c);
  }
  EXPECT_TRUE(differs);
}

TEST(ExpectedGroupRegret, Examples) {
  const BanditModel model({10.0, 5.0, 7.0}, 1.0);  // gaps 0, 5, 3

  RegretTrace optimal(3, 3, 4);
  for (std::size_t k = 0; k < 3; ++k) optimal.pull_counts[k * 3 + 0] = 4;
  EXPECT_EQ(expected_group_regret(optimal, model), 0.0);

  RegretTrace single(1, 3, 10);
  single.pull_counts[1] = 10;
  EXPECT_EQ(expected_group_regret(single, model), 50.0);

  RegretTrace pair(2, 3, 5);
  pair.pull_counts = {5, 0, 0, 1, 0, 4};  // agent 2 pulls the Delta=3 arm four times
  EXPECT_EQ(expected_group_regret(pair, model), 12.0);
}

TEST(FusionCenterBound, Examples) {
  const auto model = ten_arm_benchmark();
  EXPECT_NEAR(fusion_center_lower_bound(model, 7, 1000), 72.0 * std::log(1000.0), 1e-9);
  EXPECT_NEAR(fusion_center_lower_bound(model, 7, 1000), 497.36, 0.01);
  EXPECT_EQ(fusion_center_lower_bound(model, 7, 1), 0.0);
  EXPECT_THROW(fusion_center_lower_bound(model, 9, 1000), ValidationError);

  const BanditModel far({1e9, 0.0}, 1.0);
  EXPECT_LT(fusion_center_lower_bound(far, 1, 1000), 1e-15);
}

TEST(ArgmaxRandomTie, UniqueMaximizerConsumesNoRandomness) {
  RunRng a(5), b(5);
  const std::vector<double> v{1.0, 4.0, 2.0};
  EXPECT_EQ(argmax_random_tie(v, a), 1u);
  EXPECT_EQ(a.engine()(), b.engine()());
}

TEST(ArgmaxRandomTie, TiesAreUniform) {
  RunRng rng(17);
  const std::vector<double> v{2.0, 1.0, 2.0, 2.0};
  std::vector<int> hits(4, 0);
  const int trials = 30000;
  for (int i = 0; i < trials; ++i) ++hits[argmax_random_tie(v, rng)];
  EXPECT_EQ(hits[1], 0);
  const double p = 1.0 / 3.0;
  const double sd = std::sqrt(trials * p * (1 - p));
  for (int i : {0, 2, 3}) EXPECT_NEAR(hits[i], trials * p, 3 * sd);
}
