// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>

#include "tslcd/grid.hpp"
#include "tslcd/raster.hpp"

namespace tslcd::segmentation {

/// Per-pixel class ids in [0, classes). Not every id needs to occur.
struct SegmentationMap {
  ClassMap labels;
  int classes = 0;

  int distinct_labels() const;
};

struct KMeansOptions {
  /// Weight of the [0, 1]-scaled row/column coordinates appended to the spectral features.
  double coord_weight = 0.1;
  int max_iterations = 50;
};

/// Produces the class map that drives pretext pair sampling. Implementations must be
/// deterministic in (pair, k, seed).
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual SegmentationMap segment(const raster::BiTemporalPair& pair, int k,
                                  std::uint64_t seed) const = 0;
};

/// k-means over [t0 bands, t1 bands, weighted row, weighted col] with k-means++ seeding.
/// Ties in the assignment step go to the lowest class id.
class KMeansSegmenter final : public Segmenter {
 public:
  explicit KMeansSegmenter(KMeansOptions options = {}) : options_(options) {}
  SegmentationMap segment(const raster::BiTemporalPair& pair, int k,
                          std::uint64_t seed) const override;

 private:
  KMeansOptions options_;
};

/// Convenience wrapper around KMeansSegmenter.
SegmentationMap segment(const raster::BiTemporalPair& pair, int k, std::uint64_t seed,
                        const KMeansOptions& options = {});

}  // namespace tslcd::segmentation
