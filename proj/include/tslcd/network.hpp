// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tslcd/raster.hpp"

namespace tslcd::network {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using FeatureVector = Vector<float>;

/// Predictions are clamped to [kProbabilityFloor, 1 - kProbabilityFloor] before any logarithm.
inline constexpr double kProbabilityFloor = 1e-7;

struct Architecture {
  int bands = 3;
  /// Output channels of the 3x3 conv layers; the last entry is the feature dimension.
  std::vector<int> widths{16, 32, 64, 64};
  int hidden = 128;

  int feature_dim() const { return widths.back(); }
  void validate() const;
};

/// 3x3 same-padded convolution with bias. `weight` is out x (9 * in); column (ky * 3 + kx) * in + c
/// multiplies input channel c at kernel offset (ky, kx).
template <typename Scalar>
struct ConvLayer {
  Matrix<Scalar> weight;
  Vector<Scalar> bias;

  int in_channels() const { return static_cast<int>(weight.cols() / 9); }
  int out_channels() const { return static_cast<int>(weight.rows()); }
};

template <typename Scalar>
struct ExtractorParams {
  std::vector<ConvLayer<Scalar>> layers;

  int in_channels() const { return layers.front().in_channels(); }
  int feature_dim() const { return layers.back().out_channels(); }
};

/// Two fully connected layers over the concatenated features [f0; f1].
template <typename Scalar>
struct HeadParams {
  Matrix<Scalar> fc1_weight;  // hidden x 2F
  Vector<Scalar> fc1_bias;    // hidden
  Vector<Scalar> fc2_weight;  // hidden
  Vector<Scalar> fc2_bias;    // 1

  int input_dim() const { return static_cast<int>(fc1_weight.cols()); }
  int hidden() const { return static_cast<int>(fc1_weight.rows()); }
};

template <typename Scalar>
struct Model {
  ExtractorParams<Scalar> extractor;
  HeadParams<Scalar> head;
};

using ModelParams = Model<float>;

/// Every tensor of the parameter set as a flat span, in checkpoint order.
template <typename Scalar>
std::vector<std::span<Scalar>> tensors(ExtractorParams<Scalar>& params);
template <typename Scalar>
std::vector<std::span<Scalar>> tensors(HeadParams<Scalar>& params);

/// Same shapes, all zeros.
template <typename Scalar>
ExtractorParams<Scalar> zeros_like(const ExtractorParams<Scalar>& params);
template <typename Scalar>
HeadParams<Scalar> zeros_like(const HeadParams<Scalar>& params);

template <typename To, typename From>
ExtractorParams<To> cast(const ExtractorParams<From>& params);
template <typename To, typename From>
HeadParams<To> cast(const HeadParams<From>& params);

bool all_finite(const ModelParams& params);

/// He (fan-in) normal initialization with zero biases; deterministic per seed.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

/// Batched forward/backward through the shared extractor. Activations are laid out as
/// channels x (patch * n * n + row * n + col).
template <typename Scalar>
class ExtractorTape {
 public:
  /// input: bands x (P * n * n). Returns the F x P globally average pooled features.
  const Matrix<Scalar>& forward(const ExtractorParams<Scalar>& params, const Matrix<Scalar>& input,
                                int patch_size);
  /// Adds d(loss)/d(params) into `grads` given d(loss)/d(features) for the last forward.
  void backward(const ExtractorParams<Scalar>& params, const Matrix<Scalar>& grad_features,
                ExtractorParams<Scalar>& grads) const;

 private:
  int patch_size_ = 0;
  int patches_ = 0;
  std::vector<Matrix<Scalar>> columns_;
  std::vector<Matrix<Scalar>> activations_;
  Matrix<Scalar> features_;
};

template <typename Scalar>
class HeadTape {
 public:
  /// f0, f1: F x P. Returns the 1 x P pre-sigmoid logits.
  const Matrix<Scalar>& forward(const HeadParams<Scalar>& head, const Matrix<Scalar>& f0,
                                const Matrix<Scalar>& f1);
  /// Adds head gradients into `grads`; writes d(loss)/d(f0), d(loss)/d(f1).
  void backward(const HeadParams<Scalar>& head, const Matrix<Scalar>& grad_logits,
                HeadParams<Scalar>& grads, Matrix<Scalar>& grad_f0, Matrix<Scalar>& grad_f1) const;

 private:
  Matrix<Scalar> input_;
  Matrix<Scalar> pre_activation_;
  Matrix<Scalar> hidden_;
  Matrix<Scalar> logits_;
};

/// Packs patches into the bands x (P * n * n) layout used by ExtractorTape.
template <typename Scalar>
Matrix<Scalar> pack_patches(std::span<const raster::Patch* const> patches);

/// Four conv + ReLU layers followed by global average pooling.
template <typename Scalar>
Vector<Scalar> extract_features(const ExtractorParams<Scalar>& params, const raster::Patch& patch);
FeatureVector extract_features(const ExtractorParams<float>& params, const raster::Patch& patch);

double feature_distance(std::span<const float> f0, std::span<const float> f1);
double feature_distance(const FeatureVector& f0, const FeatureVector& f1);

/// Logistic function, stable on both tails.
double sigmoid(double x);
/// sigmoid(logit) clamped into [kProbabilityFloor, 1 - kProbabilityFloor].
double probability(double logit);

/// y-hat for the concatenation (f0, f1): FC + ReLU, FC, sigmoid, clamp.
template <typename Scalar>
double predict_change(const HeadParams<Scalar>& head, const Vector<Scalar>& f0,
                      const Vector<Scalar>& f1);

/// d(y-hat)/d(head parameter) for every head weight and bias (zero where the clamp is active).
template <typename Scalar>
HeadParams<Scalar> predict_change_gradient(const HeadParams<Scalar>& head,
                                           const Vector<Scalar>& f0, const Vector<Scalar>& f1);

}  // namespace tslcd::network
