// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace tslcd::losses {

/// Feature distances d and similarity labels y (1 similar, 0 dissimilar) for N pairs.
struct ContrastiveBatch {
  std::vector<double> distances;
  std::vector<std::uint8_t> labels;
  double margin = 1.0;
};

/// Predictions y-hat in (0, 1) with change labels y in {0, 1}.
struct MiningBatch {
  std::vector<double> predictions;
  std::vector<std::uint8_t> labels;
  double gamma = 15.0;
};

/// 1/(2N) * sum of y d^2 + (1 - y) max(m - d, 0)^2.
double contrastive_loss(const ContrastiveBatch& batch);

/// dL/dd per pair: d/N for similar pairs, -max(m - d, 0)/N for dissimilar ones.
std::vector<double> contrastive_grad(const ContrastiveBatch& batch);

/// The hard-example weight [sigmoid(0.5 - y_hat)]^gamma for y = 1 and
/// [sigmoid(y_hat - 0.5)]^gamma for y = 0.
double mining_weight(std::uint8_t label, double prediction, double gamma);

/// Per-sample -weight * log(p) where p is the probability given to the true class.
double mining_term(std::uint8_t label, double prediction, double gamma);

/// -y log(y_hat) - (1 - y) log(1 - y_hat).
double binary_cross_entropy(std::uint8_t label, double prediction);

/// Batch mean of mining_term. Throws InvalidArgument when a prediction leaves (0, 1).
double hard_mining_loss(const MiningBatch& batch);

/// dL/d(y_hat) per sample, including the batch 1/N. With detach_weight the weight is treated as
/// a constant (focal-loss style); otherwise the full product rule applies.
std::vector<double> hard_mining_grad(const MiningBatch& batch, bool detach_weight = false);

}  // namespace tslcd::losses
