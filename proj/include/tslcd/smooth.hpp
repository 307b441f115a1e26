// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tslcd/grid.hpp"

namespace tslcd::smooth {

/// Patch predictions y-hat for centers on rows/cols 0, s, 2s, ... of a height x width image.
struct PatchPredictionGrid {
  Grid<float> predictions;
  int height = 0;
  int width = 0;
  int patch_size = 7;
  int stride = 1;

  /// Throws unless the prediction grid matches ceil(height / stride) x ceil(width / stride).
  void validate() const;
};

/// Signed per-pixel accumulation of Gaussian-weighted patch votes.
struct ReliabilityField {
  RealMap values;
  double sigma = 0.0;
  int patch_size = 0;
  int stride = 0;
};

/// 1 / (2 pi sigma) * exp(-d^2 / sigma^2), exactly in this form.
double patch_reliability(double distance, double sigma);

/// 1 -> +1, 0 -> -1.
int signed_label(int binary_prediction);

/// Predictions at or above 0.5 count as change.
inline int binarize(double prediction) { return prediction >= 0.5 ? 1 : 0; }

/// Per pixel, the sum over every patch whose n x n window contains it of
/// signed_label(binarize(y-hat)) * patch_reliability(distance to the patch center, sigma).
/// With `soft`, the vote is 2 y-hat - 1 instead. Throws naming the first pixel no patch covers.
ReliabilityField accumulate(const PatchPredictionGrid& preds, double sigma, bool soft = false);

/// V > tau -> changed, else unchanged.
LabelMap threshold_reliability(const ReliabilityField& field, double tau = 0.0);

/// Unsmoothed change map: each pixel takes the binarized prediction of its nearest center.
LabelMap raw_change_map(const PatchPredictionGrid& preds);

}  // namespace tslcd::smooth
