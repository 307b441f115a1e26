// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace tslcd::smooth {

void PatchPredictionGrid::validate() const {
  if (patch_size < 1 || patch_size % 2 == 0) {
    throw InvalidArgument("patch size must be a positive odd number");
  }
  if (stride < 1) throw InvalidArgument("prediction stride must be at least 1");
  if (height < 1 || width < 1) throw InvalidArgument("prediction grid needs an image extent");
  const int rows = (height + stride - 1) / stride;
  const int cols = (width + stride - 1) / stride;
  if (predictions.height() != rows || predictions.width() != cols ||
      predictions.channels() != 1) {
    throw InvalidArgument("prediction grid is " + predictions.shape_string() + " but a " +
                          std::to_string(height) + "x" + std::to_string(width) +
                          " image at stride " + std::to_string(stride) + " needs " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

double patch_reliability(double distance, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("reliability sigma must be positive");
  return 1.0 / (2.0 * std::numbers::pi * sigma) * std::exp(-(distance * distance) / (sigma * sigma));
}

int signed_label(int binary_prediction) { return binary_prediction == 1 ? 1 : -1; }

namespace {

// First index along an axis of `length` that no center within `radius` reaches, or -1.
int first_uncovered(int length, int stride, int radius) {
  for (int i = 0; i < length; ++i) {
    const int below = (i / stride) * stride;
    const int above = below + stride;
    const bool covered =
        i - below <= radius || (above < length && above - i <= radius);
    if (!covered) return i;
  }
  return -1;
}

}  // namespace

ReliabilityField accumulate(const PatchPredictionGrid& preds, double sigma, bool soft) {
  preds.validate();
  if (!(sigma > 0.0)) throw InvalidArgument("reliability sigma must be positive");
  const int radius = (preds.patch_size - 1) / 2;
  const int bad_row = first_uncovered(preds.height, preds.stride, radius);
  const int bad_col = first_uncovered(preds.width, preds.stride, radius);
  if (bad_row >= 0 || bad_col >= 0) {
    throw InvalidArgument("pixel (" + std::to_string(std::max(bad_row, 0)) + ", " +
                          std::to_string(std::max(bad_col, 0)) +
                          ") is not covered by any patch at stride " +
                          std::to_string(preds.stride));
  }

  const int n = preds.patch_size;
  std::vector<double> kernel(static_cast<std::size_t>(n) * n);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      kernel[static_cast<std::size_t>(dy + radius) * n + (dx + radius)] =
          patch_reliability(std::sqrt(static_cast<double>(dy * dy + dx * dx)), sigma);
    }
  }

  ReliabilityField field{RealMap(preds.height, preds.width), sigma, preds.patch_size,
                         preds.stride};
  for (int pr = 0; pr < preds.predictions.height(); ++pr) {
    for (int pc = 0; pc < preds.predictions.width(); ++pc) {
      const double y_hat = preds.predictions.at(pr, pc);
      const double vote = soft ? 2.0 * y_hat - 1.0 : signed_label(binarize(y_hat));
      const int cr = pr * preds.stride;
      const int cc = pc * preds.stride;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int r = cr + dy;
        if (r < 0 || r >= preds.height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int c = cc + dx;
          if (c < 0 || c >= preds.width) continue;
          field.values.at(r, c) +=
              vote * kernel[static_cast<std::size_t>(dy + radius) * n + (dx + radius)];
        }
      }
    }
  }
  return field;
}

LabelMap threshold_reliability(const ReliabilityField& field, double tau) {
  LabelMap out(field.values.height(), field.values.width());
  const auto src = field.values.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > tau ? kChanged : kUnchanged;
  return out;
}

LabelMap raw_change_map(const PatchPredictionGrid& preds) {
  preds.validate();
  LabelMap out(preds.height, preds.width);
  const int s = preds.stride;
  auto nearest = [s](int i, int count) {
    return std::min((i + s / 2) / s, count - 1);
  };
  for (int r = 0; r < preds.height; ++r) {
    const int pr = nearest(r, preds.predictions.height());
    for (int c = 0; c < preds.width; ++c) {
      const int pc = nearest(c, preds.predictions.width());
      out.at(r, c) = static_cast<std::uint8_t>(binarize(preds.predictions.at(pr, pc)));
    }
  }
  return out;
}

}  // namespace tslcd::smooth
