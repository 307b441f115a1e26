// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "tslcd/grid.hpp"
#include "tslcd/raster.hpp"

namespace tslcd::pseudo_label {

/// Per-pixel Euclidean norm of the band-wise difference t1 - t0.
RealMap cva_magnitude(const raster::BiTemporalPair& pair);

/// Threshold that maximizes the between-class variance of a `bins`-bin histogram spanning
/// [min, max]. When several cuts tie, the midpoint between the first and last tied cut is used,
/// so mirroring the data mirrors the threshold. Throws for a constant map.
double otsu_threshold(const RealMap& magnitude, int bins = 256);

/// >= threshold * (1 + margin) -> changed, <= threshold * (1 - margin) -> unchanged,
/// otherwise unknown. Changed is tested first, so a tie at margin 0 becomes changed.
LabelMap make_pseudo_labels(const RealMap& magnitude, double threshold, double margin);

struct TrainingCenter {
  int row = 0;
  int col = 0;
  std::uint8_t label = kUnchanged;
};

struct TrainingSetOptions {
  int samples_per_class = 3000;
  /// Equal changed/unchanged counts. Classes with fewer confident pixels are oversampled.
  bool balance = true;
  std::uint64_t seed = 0;
};

/// Picks training centers among the confident (non-unknown) pixels. Throws unless both
/// classes are present.
std::vector<TrainingCenter> select_training_centers(const LabelMap& pseudo,
                                                    const TrainingSetOptions& options);

}  // namespace tslcd::pseudo_label
