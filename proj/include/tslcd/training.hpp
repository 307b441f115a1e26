// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tslcd/network.hpp"
#include "tslcd/pseudo_label.hpp"
#include "tslcd/raster.hpp"
#include "tslcd/sampling.hpp"

namespace tslcd::training {

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 20;
  std::uint64_t seed = 0;
  double margin = 1.0;
  double gamma = 15.0;
  /// Treat the hard-example weight as a constant when differentiating the mining loss.
  bool detach_weight = false;
  /// Keep the pretrained extractor fixed while training the change head.
  bool freeze_backbone = false;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_seconds;
  std::filesystem::path checkpoint;
  double seconds = 0.0;
};

/// Writes `epoch,loss,seconds` rows, seconds cumulative.
void write_loss_csv(const TrainReport& report, const std::filesystem::path& path);

/// SGD with momentum: v <- momentum * v + g, w <- w - lr * v.
class Sgd {
 public:
  Sgd(double learning_rate, double momentum) : lr_(learning_rate), momentum_(momentum) {}
  void step(const std::vector<std::span<float>>& params,
            const std::vector<std::span<float>>& grads);

 private:
  double lr_;
  double momentum_;
  std::vector<std::vector<float>> velocity_;
};

struct PretrainResult {
  network::ExtractorParams<float> extractor;
  TrainReport report;
};

/// Minimizes the contrastive loss over shuffled mini-batches; both patches of every pair go
/// through the one shared extractor.
PretrainResult pretrain_self(const sampling::PairDataset& dataset,
                             network::ExtractorParams<float> initial, const TrainConfig& cfg);
PretrainResult pretrain_self(const sampling::PairDataset& dataset,
                             const network::Architecture& arch, const TrainConfig& cfg);

struct ChangeTrainResult {
  network::ModelParams model;
  TrainReport report;
};

/// Embeds the t0 and t1 patches around every training center with the shared extractor
/// (initialized from `pretrained`), classifies the pair with the change head and minimizes
/// the hard-mining loss. Head weights come from init_params(arch, cfg.seed).
ChangeTrainResult train_cd(const raster::BiTemporalPair& pair,
                           std::span<const pseudo_label::TrainingCenter> centers,
                           const network::ExtractorParams<float>& pretrained, int patch_size,
                           int head_hidden, const TrainConfig& cfg);

/// Selects balanced centers from the confident pseudo labels and trains.
ChangeTrainResult train_cd(const raster::BiTemporalPair& pair, const LabelMap& pseudo,
                           const network::ExtractorParams<float>& pretrained, int patch_size,
                           int head_hidden, const TrainConfig& cfg,
                           const pseudo_label::TrainingSetOptions& selection);

/// y-hat for a patch centered on every pixel of a grid with the given stride
/// (rows 0, s, 2s, ...). Returns a grid of ceil(H/s) x ceil(W/s) probabilities.
Grid<float> predict_dense(const raster::BiTemporalPair& pair, const network::ModelParams& model,
                          int patch_size, int stride, int batch_size = 256);

}  // namespace tslcd::training
