// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tslcd/error.hpp"
#include "tslcd/losses.hpp"

namespace tslcd::losses {
namespace {

TEST(Contrastive, HandComputedValues) {
  EXPECT_DOUBLE_EQ(contrastive_loss({{0.5}, {1}, 1.0}), 0.125);
  EXPECT_DOUBLE_EQ(contrastive_loss({{0.5}, {0}, 1.0}), 0.125);
  EXPECT_DOUBLE_EQ(contrastive_loss({{1.5}, {0}, 1.0}), 0.0);
  EXPECT_DOUBLE_EQ(contrastive_loss({{0.0, 2.0}, {1, 1}, 1.0}), (0.0 + 4.0) / 4.0);
}

TEST(Contrastive, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    ContrastiveBatch batch;
    batch.margin = 1.0;
    for (int i = 0; i < 8; ++i) {
      double d = dist(rng);
      if (std::abs(d - batch.margin) < 1e-3) d += 2e-3;
      batch.distances.push_back(d);
      batch.labels.push_back(coin(rng));
    }
    const auto grad = contrastive_grad(batch);
    for (int i = 0; i < 8; ++i) {
      const double h = 1e-6;
      auto plus = batch, minus = batch;
      plus.distances[i] += h;
      minus.distances[i] -= h;
      const double fd = (contrastive_loss(plus) - contrastive_loss(minus)) / (2 * h);
      EXPECT_NEAR(grad[i], fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Contrastive, RejectsInvalidBatches) {
  EXPECT_THROW(contrastive_loss({}), InvalidArgument);
  EXPECT_THROW(contrastive_loss({{0.1, 0.2}, {1}, 1.0}), InvalidArgument);
  EXPECT_THROW(contrastive_loss({{-0.1}, {1}, 1.0}), InvalidArgument);
  EXPECT_THROW(contrastive_loss({{0.1}, {1}, 0.0}), InvalidArgument);
}

TEST(Mining, GammaZeroIsBinaryCrossEntropy) {
  EXPECT_NEAR(binary_cross_entropy(1, 0.5), 0.6931, 1e-4);
  EXPECT_NEAR(binary_cross_entropy(0, 0.5), 0.6931, 1e-4);
  for (int k = 1; k <= 99; ++k) {
    const double p = k / 100.0;
    for (std::uint8_t y : {0, 1}) {
      const double bce = y == 1 ? -std::log(p) : -std::log(1.0 - p);
      EXPECT_NEAR(hard_mining_loss({{p}, {y}, 0.0}), bce, 1e-9);
    }
  }
}

TEST(Mining, HardExamplesOutweighEasyOnes) {
  const double hard = mining_weight(1, 0.1, 15.0);
  const double easy = mining_weight(1, 0.9, 15.0);
  EXPECT_GT(hard / easy, 100.0);
  EXPECT_NEAR(hard / easy, std::exp(0.8 * 15.0 / 2.0), 1e-6 * hard / easy);
  EXPECT_GT(mining_weight(0, 0.9, 15.0) / mining_weight(0, 0.1, 15.0), 100.0);
}

TEST(Mining, LossIsBatchMean) {
  const MiningBatch batch{{0.2, 0.7, 0.4}, {1, 0, 0}, 2.0};
  const double expected =
      (mining_term(1, 0.2, 2.0) + mining_term(0, 0.7, 2.0) + mining_term(0, 0.4, 2.0)) / 3.0;
  EXPECT_DOUBLE_EQ(hard_mining_loss(batch), expected);
}

TEST(Mining, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> pred(0.02, 0.98);
  std::uniform_real_distribution<double> gam(0.0, 15.0);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    MiningBatch batch;
    batch.gamma = gam(rng);
    for (int i = 0; i < 6; ++i) {
      batch.predictions.push_back(pred(rng));
      batch.labels.push_back(coin(rng));
    }
    const auto grad = hard_mining_grad(batch);
    for (int i = 0; i < 6; ++i) {
      const double h = 1e-6;
      auto plus = batch, minus = batch;
      plus.predictions[i] += h;
      minus.predictions[i] -= h;
      const double fd = (hard_mining_loss(plus) - hard_mining_loss(minus)) / (2 * h);
      const double scale = std::max(std::abs(fd), 1e-8);
      EXPECT_LT(std::abs(grad[i] - fd) / scale, 1e-4)
          << "trial " << trial << " y=" << int(batch.labels[i]) << " p=" << batch.predictions[i];
    }
  }
}

TEST(Mining, DetachedGradientTreatsWeightAsConstant) {
  const MiningBatch batch{{0.3, 0.8}, {1, 0}, 4.0};
  const auto grad = hard_mining_grad(batch, true);
  EXPECT_NEAR(grad[0], -mining_weight(1, 0.3, 4.0) / 0.3 / 2.0, 1e-12);
  EXPECT_NEAR(grad[1], mining_weight(0, 0.8, 4.0) / 0.2 / 2.0, 1e-12);
}

TEST(Mining, RejectsPredictionsOutsideOpenInterval) {
  EXPECT_THROW(hard_mining_loss({{0.0}, {1}, 1.0}), InvalidArgument);
  EXPECT_THROW(hard_mining_loss({{1.0}, {0}, 1.0}), InvalidArgument);
  EXPECT_THROW(hard_mining_loss({{0.5}, {2}, 1.0}), InvalidArgument);
  EXPECT_THROW(hard_mining_loss({{0.5}, {1}, -1.0}), InvalidArgument);
}

}  // namespace
}  // namespace tslcd::losses
