// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tslcd/error.hpp"
#include "tslcd/network.hpp"

namespace tslcd::losses {

namespace {

void check(const ContrastiveBatch& batch) {
  if (batch.distances.empty()) throw InvalidArgument("contrastive batch is empty");
  if (batch.distances.size() != batch.labels.size()) {
    throw InvalidArgument("contrastive batch has mismatched distance and label counts");
  }
  if (!(batch.margin > 0.0)) throw InvalidArgument("contrastive margin must be positive");
  for (std::size_t i = 0; i < batch.distances.size(); ++i) {
    if (!(batch.distances[i] >= 0.0) || batch.labels[i] > 1) {
      throw InvalidArgument("contrastive pair " + std::to_string(i) + " is invalid");
    }
  }
}

void check_sample(std::uint8_t label, double prediction) {
  if (label > 1) throw InvalidArgument("mining label must be 0 or 1");
  if (!(prediction > 0.0 && prediction < 1.0)) {
    throw InvalidArgument("prediction " + std::to_string(prediction) + " lies outside (0, 1)");
  }
}

void check(const MiningBatch& batch) {
  if (batch.predictions.empty()) throw InvalidArgument("mining batch is empty");
  if (batch.predictions.size() != batch.labels.size()) {
    throw InvalidArgument("mining batch has mismatched prediction and label counts");
  }
  if (!(batch.gamma >= 0.0)) throw InvalidArgument("gamma must be non-negative");
  for (std::size_t i = 0; i < batch.predictions.size(); ++i) {
    check_sample(batch.labels[i], batch.predictions[i]);
  }
}

}  // namespace

double contrastive_loss(const ContrastiveBatch& batch) {
  check(batch);
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.distances.size(); ++i) {
    const double d = batch.distances[i];
    const double hinge = std::max(batch.margin - d, 0.0);
    sum += batch.labels[i] == 1 ? d * d : hinge * hinge;
  }
  return sum / (2.0 * static_cast<double>(batch.distances.size()));
}

std::vector<double> contrastive_grad(const ContrastiveBatch& batch) {
  check(batch);
  const double inv_n = 1.0 / static_cast<double>(batch.distances.size());
  std::vector<double> grad(batch.distances.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double d = batch.distances[i];
    grad[i] = batch.labels[i] == 1 ? d * inv_n : -std::max(batch.margin - d, 0.0) * inv_n;
  }
  return grad;
}

double mining_weight(std::uint8_t label, double prediction, double gamma) {
  const double arg = label == 1 ? 0.5 - prediction : prediction - 0.5;
  return std::pow(network::sigmoid(arg), gamma);
}

double binary_cross_entropy(std::uint8_t label, double prediction) {
  check_sample(label, prediction);
  return label == 1 ? -std::log(prediction) : -std::log1p(-prediction);
}

double mining_term(std::uint8_t label, double prediction, double gamma) {
  check_sample(label, prediction);
  return mining_weight(label, prediction, gamma) * binary_cross_entropy(label, prediction);
}

double hard_mining_loss(const MiningBatch& batch) {
  check(batch);
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.predictions.size(); ++i) {
    sum += mining_term(batch.labels[i], batch.predictions[i], batch.gamma);
  }
  return sum / static_cast<double>(batch.predictions.size());
}

std::vector<double> hard_mining_grad(const MiningBatch& batch, bool detach_weight) {
  check(batch);
  const double inv_n = 1.0 / static_cast<double>(batch.predictions.size());
  const double gamma = batch.gamma;
  std::vector<double> grad(batch.predictions.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double p = batch.predictions[i];
    double g = 0.0;
    if (batch.labels[i] == 1) {
      // L = -s^g log p, s = sigmoid(0.5 - p), ds/dp = -s (1 - s)
      const double s = network::sigmoid(0.5 - p);
      const double w = std::pow(s, gamma);
      g = -w / p;
      if (!detach_weight) g += gamma * w * (1.0 - s) * std::log(p);
    } else {
      // L = -t^g log(1 - p), t = sigmoid(p - 0.5), dt/dp = t (1 - t)
      const double t = network::sigmoid(p - 0.5);
      const double w = std::pow(t, gamma);
      g = w / (1.0 - p);
      if (!detach_weight) g -= gamma * w * (1.0 - t) * std::log1p(-p);
    }
    grad[i] = g * inv_n;
  }
  return grad;
}

}  // namespace tslcd::losses
