// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "tslcd/losses.hpp"
#include "tslcd/parallel.hpp"

namespace tslcd::training {

using network::ExtractorParams;
using network::ExtractorTape;
using network::HeadParams;
using network::HeadTape;
using network::Matrix;

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be a finite non-negative number");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (!(margin > 0.0)) throw InvalidArgument("contrastive margin must be positive");
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be non-negative");
}

void write_loss_csv(const TrainReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "epoch,loss,seconds\n";
  char line[96];
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    std::snprintf(line, sizeof(line), "%zu,%.9g,%.3f\n", e + 1, report.epoch_loss[e],
                  e < report.epoch_seconds.size() ? report.epoch_seconds[e] : 0.0);
    out << line;
  }
}

void Sgd::step(const std::vector<std::span<float>>& params,
               const std::vector<std::span<float>>& grads) {
  if (params.size() != grads.size()) throw InvalidArgument("parameter/gradient count mismatch");
  if (velocity_.empty()) {
    for (const auto& p : params) velocity_.emplace_back(p.size(), 0.0f);
  }
  const auto lr = static_cast<float>(lr_);
  const auto mu = static_cast<float>(momentum_);
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& v = velocity_[t];
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = mu * v[i] + grads[t][i];
      params[t][i] -= lr * v[i];
    }
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

void zero(const std::vector<std::span<float>>& grads) {
  for (auto g : grads) std::fill(g.begin(), g.end(), 0.0f);
}

void check_finite(double loss, int epoch, const char* stage) {
  if (!std::isfinite(loss)) {
    throw TrainingDiverged(std::string(stage) + " loss became non-finite in epoch " +
                           std::to_string(epoch) + "; lower the learning rate");
  }
}

// Non-finite activations surface as divergence before they reach the loss checks.
void check_finite(const Matrix<float>& values, int epoch, const char* stage) {
  if (!values.allFinite()) check_finite(std::numeric_limits<double>::quiet_NaN(), epoch, stage);
}

// Packs patches around `centers` from both dates: columns [0, P) come from t0, [P, 2P) from t1.
Matrix<float> pack_centers(const raster::PaddedImage& t0, const raster::PaddedImage& t1,
                           std::span<const pseudo_label::TrainingCenter> centers,
                           std::span<const std::size_t> order) {
  const int n = t0.patch_size();
  const int nn = n * n;
  const int bands = t0.padded().channels();
  const auto count = static_cast<Eigen::Index>(order.size());
  Matrix<float> out(bands, 2 * count * nn);
  for (Eigen::Index p = 0; p < count; ++p) {
    const auto& c = centers[order[static_cast<std::size_t>(p)]];
    for (int date = 0; date < 2; ++date) {
      const Image& src = (date == 0 ? t0 : t1).padded();
      const Eigen::Index base = (date * count + p) * nn;
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const float* px = &src.at(c.row + y, c.col + x);
          for (int b = 0; b < bands; ++b) out(b, base + y * n + x) = px[b];
        }
      }
    }
  }
  return out;
}

}  // namespace

PretrainResult pretrain_self(const sampling::PairDataset& dataset,
                             ExtractorParams<float> initial, const TrainConfig& cfg) {
  cfg.validate();
  const auto& samples = dataset.samples;
  if (samples.empty()) throw InvalidArgument("pretraining dataset is empty");
  const bool has_similar = std::any_of(samples.begin(), samples.end(),
                                       [](const auto& s) { return s.label == 1; });
  const bool has_dissimilar = std::any_of(samples.begin(), samples.end(),
                                          [](const auto& s) { return s.label == 0; });
  if (!has_similar || !has_dissimilar) {
    throw InvalidArgument("pretraining dataset needs both similar and dissimilar pairs");
  }

  PretrainResult result{std::move(initial), {}};
  ExtractorParams<float>& params = result.extractor;
  ExtractorParams<float> grads = network::zeros_like(params);
  const auto param_views = network::tensors(params);
  const auto grad_views = network::tensors(grads);
  Sgd optimizer(cfg.learning_rate, cfg.momentum);
  ExtractorTape<float> tape;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  const auto start = Clock::now();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::size_t count = end - begin;
      std::vector<const raster::Patch*> patches(2 * count);
      losses::ContrastiveBatch batch;
      batch.margin = cfg.margin;
      for (std::size_t i = 0; i < count; ++i) {
        const auto& s = samples[order[begin + i]];
        patches[i] = &s.patch_a;
        patches[count + i] = &s.patch_b;
        batch.labels.push_back(s.label);
      }
      const Matrix<float>& features =
          tape.forward(params, network::pack_patches<float>(patches), dataset.patch_size);
      check_finite(features, epoch, "pretraining");
      const auto cols = static_cast<Eigen::Index>(count);
      const Matrix<float> diff = features.leftCols(cols) - features.rightCols(cols);
      for (Eigen::Index i = 0; i < cols; ++i) {
        batch.distances.push_back(std::sqrt(diff.col(i).cast<double>().squaredNorm()));
      }
      const double loss = losses::contrastive_loss(batch);
      check_finite(loss, epoch, "pretraining");
      loss_sum += loss * static_cast<double>(count);
      const std::vector<double> dl_dd = losses::contrastive_grad(batch);

      Matrix<float> grad_features(features.rows(), features.cols());
      for (Eigen::Index i = 0; i < cols; ++i) {
        const double d = batch.distances[static_cast<std::size_t>(i)];
        const float scale = d > 0.0 ? static_cast<float>(dl_dd[static_cast<std::size_t>(i)] / d) : 0.0f;
        grad_features.col(i) = diff.col(i) * scale;
        grad_features.col(cols + i) = -grad_features.col(i);
      }
      zero(grad_views);
      tape.backward(params, grad_features, grads);
      optimizer.step(param_views, grad_views);
    }
    const double epoch_loss = loss_sum / static_cast<double>(samples.size());
    check_finite(epoch_loss, epoch, "pretraining");
    result.report.epoch_loss.push_back(epoch_loss);
    result.report.epoch_seconds.push_back(elapsed(start));
    spdlog::info("pretrain epoch {}/{}: loss {:.6g}", epoch, cfg.epochs, epoch_loss);
  }
  result.report.seconds = elapsed(start);
  return result;
}

PretrainResult pretrain_self(const sampling::PairDataset& dataset,
                             const network::Architecture& arch, const TrainConfig& cfg) {
  network::Architecture checked = arch;
  checked.bands = dataset.bands;
  return pretrain_self(dataset, network::init_params(checked, cfg.seed).extractor, cfg);
}

ChangeTrainResult train_cd(const raster::BiTemporalPair& pair,
                           std::span<const pseudo_label::TrainingCenter> centers,
                           const ExtractorParams<float>& pretrained, int patch_size,
                           int head_hidden, const TrainConfig& cfg) {
  cfg.validate();
  pair.validate(patch_size);
  if (pretrained.layers.empty() || pretrained.in_channels() != pair.bands()) {
    throw InvalidArgument("pretrained extractor expects " +
                          std::to_string(pretrained.layers.empty() ? 0 : pretrained.in_channels()) +
                          " bands but the image pair has " + std::to_string(pair.bands()));
  }
  bool seen[2] = {false, false};
  for (const auto& c : centers) {
    if (c.label > 1) throw InvalidArgument("training centers must be labeled 0 or 1");
    if (!pair.t0.contains(c.row, c.col)) throw InvalidArgument("training center outside the image");
    seen[c.label] = true;
  }
  if (!seen[0] || !seen[1]) {
    throw InvalidArgument("change training needs both changed and unchanged centers");
  }

  network::Architecture arch;
  arch.bands = pair.bands();
  arch.widths.clear();
  for (const auto& layer : pretrained.layers) arch.widths.push_back(layer.out_channels());
  arch.hidden = head_hidden;

  ChangeTrainResult result;
  result.model = network::init_params(arch, cfg.seed);
  result.model.extractor = pretrained;
  auto& extractor = result.model.extractor;
  auto& head = result.model.head;

  ExtractorParams<float> extractor_grads = network::zeros_like(extractor);
  HeadParams<float> head_grads = network::zeros_like(head);
  auto param_views = network::tensors(head);
  auto grad_views = network::tensors(head_grads);
  if (!cfg.freeze_backbone) {
    for (auto v : network::tensors(extractor)) param_views.push_back(v);
    for (auto v : network::tensors(extractor_grads)) grad_views.push_back(v);
  }
  Sgd optimizer(cfg.learning_rate, cfg.momentum);

  const raster::PaddedImage padded_t0(pair.t0, patch_size);
  const raster::PaddedImage padded_t1(pair.t1, patch_size);
  ExtractorTape<float> extractor_tape;
  HeadTape<float> head_tape;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(centers.size());
  std::iota(order.begin(), order.end(), 0);

  const auto start = Clock::now();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const auto count = static_cast<Eigen::Index>(end - begin);
      const std::span<const std::size_t> batch_order(order.data() + begin, end - begin);
      const Matrix<float>& features = extractor_tape.forward(
          extractor, pack_centers(padded_t0, padded_t1, centers, batch_order), patch_size);
      const Matrix<float> f0 = features.leftCols(count);
      const Matrix<float> f1 = features.rightCols(count);
      const Matrix<float>& logits = head_tape.forward(head, f0, f1);
      check_finite(logits, epoch, "change detection");

      losses::MiningBatch batch;
      batch.gamma = cfg.gamma;
      std::vector<double> slope(static_cast<std::size_t>(count));
      for (Eigen::Index i = 0; i < count; ++i) {
        const double logit = logits(0, i);
        const double s = network::sigmoid(logit);
        batch.predictions.push_back(network::probability(logit));
        batch.labels.push_back(centers[batch_order[static_cast<std::size_t>(i)]].label);
        const bool clamped = s < network::kProbabilityFloor || s > 1.0 - network::kProbabilityFloor;
        slope[static_cast<std::size_t>(i)] = clamped ? 0.0 : s * (1.0 - s);
      }
      const double loss = losses::hard_mining_loss(batch);
      check_finite(loss, epoch, "change detection");
      loss_sum += loss * static_cast<double>(count);
      const std::vector<double> dl_dp = losses::hard_mining_grad(batch, cfg.detach_weight);
      Matrix<float> grad_logits(1, count);
      for (Eigen::Index i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        grad_logits(0, i) = static_cast<float>(dl_dp[k] * slope[k]);
      }

      zero(grad_views);
      Matrix<float> grad_f0, grad_f1;
      head_tape.backward(head, grad_logits, head_grads, grad_f0, grad_f1);
      if (!cfg.freeze_backbone) {
        Matrix<float> grad_features(features.rows(), features.cols());
        grad_features << grad_f0, grad_f1;
        extractor_tape.backward(extractor, grad_features, extractor_grads);
      }
      optimizer.step(param_views, grad_views);
    }
    const double epoch_loss = loss_sum / static_cast<double>(order.size());
    check_finite(epoch_loss, epoch, "change detection");
    result.report.epoch_loss.push_back(epoch_loss);
    result.report.epoch_seconds.push_back(elapsed(start));
    spdlog::info("train epoch {}/{}: loss {:.6g}", epoch, cfg.epochs, epoch_loss);
  }
  result.report.seconds = elapsed(start);
  return result;
}

ChangeTrainResult train_cd(const raster::BiTemporalPair& pair, const LabelMap& pseudo,
                           const ExtractorParams<float>& pretrained, int patch_size,
                           int head_hidden, const TrainConfig& cfg,
                           const pseudo_label::TrainingSetOptions& selection) {
  if (!pseudo.same_extent(pair.t0)) {
    throw InvalidArgument("pseudo-label map " + pseudo.shape_string() +
                          " does not match the image pair " + pair.t0.shape_string());
  }
  const auto centers = pseudo_label::select_training_centers(pseudo, selection);
  return train_cd(pair, centers, pretrained, patch_size, head_hidden, cfg);
}

Grid<float> predict_dense(const raster::BiTemporalPair& pair, const network::ModelParams& model,
                          int patch_size, int stride, int batch_size) {
  pair.validate(patch_size);
  if (stride < 1) throw InvalidArgument("inference stride must be at least 1");
  if (batch_size < 1) throw InvalidArgument("inference batch size must be at least 1");
  const int rows = (pair.height() + stride - 1) / stride;
  const int cols = (pair.width() + stride - 1) / stride;
  Grid<float> out(rows, cols);
  std::vector<pseudo_label::TrainingCenter> centers;
  centers.reserve(out.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) centers.push_back({r * stride, c * stride, 0});

  const raster::PaddedImage padded_t0(pair.t0, patch_size);
  const raster::PaddedImage padded_t1(pair.t1, patch_size);
  const std::size_t batches = (centers.size() + batch_size - 1) / batch_size;
  auto values = out.values();
  parallel_for(
      batches,
      [&](std::size_t first, std::size_t last) {
        ExtractorTape<float> extractor_tape;
        HeadTape<float> head_tape;
        std::vector<std::size_t> order;
        for (std::size_t b = first; b < last; ++b) {
          const std::size_t begin = b * batch_size;
          const std::size_t end = std::min(centers.size(), begin + batch_size);
          order.resize(end - begin);
          std::iota(order.begin(), order.end(), begin);
          const auto count = static_cast<Eigen::Index>(order.size());
          const Matrix<float>& features = extractor_tape.forward(
              model.extractor, pack_centers(padded_t0, padded_t1, centers, order), patch_size);
          const Matrix<float>& logits =
              head_tape.forward(model.head, features.leftCols(count), features.rightCols(count));
          for (Eigen::Index i = 0; i < count; ++i) {
            values[begin + static_cast<std::size_t>(i)] =
                static_cast<float>(network::probability(logits(0, i)));
          }
        }
      },
      1);
  return out;
}

}  // namespace tslcd::training
