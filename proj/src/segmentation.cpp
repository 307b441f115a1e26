// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/segmentation.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "tslcd/parallel.hpp"

namespace tslcd::segmentation {

int SegmentationMap::distinct_labels() const {
  std::set<std::int32_t> seen(labels.values().begin(), labels.values().end());
  return static_cast<int>(seen.size());
}

namespace {

// Row-major N x D feature matrix.
std::vector<double> pixel_features(const raster::BiTemporalPair& pair, double coord_weight,
                                   int& dims) {
  const int h = pair.height();
  const int w = pair.width();
  const int bands = pair.bands();
  dims = 2 * bands + 2;
  std::vector<double> features(pair.t0.pixel_count() * dims);
  const double row_scale = h > 1 ? coord_weight / (h - 1) : 0.0;
  const double col_scale = w > 1 ? coord_weight / (w - 1) : 0.0;
  std::size_t i = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double* f = &features[i * dims];
      for (int b = 0; b < bands; ++b) {
        f[b] = pair.t0.at(r, c, b);
        f[bands + b] = pair.t1.at(r, c, b);
      }
      f[2 * bands] = r * row_scale;
      f[2 * bands + 1] = c * col_scale;
      ++i;
    }
  }
  return features;
}

double squared_distance(const double* a, const double* b, int dims) {
  double s = 0.0;
  for (int d = 0; d < dims; ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

std::vector<double> kmeans_plus_plus(const std::vector<double>& features, std::size_t count,
                                     int dims, int k, std::mt19937_64& rng) {
  std::vector<double> centers(static_cast<std::size_t>(k) * dims);
  std::uniform_int_distribution<std::size_t> pick(0, count - 1);
  std::size_t first = pick(rng);
  std::copy_n(&features[first * dims], dims, centers.begin());

  std::vector<double> nearest(count, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 1; j < k; ++j) {
    const double* last = &centers[static_cast<std::size_t>(j - 1) * dims];
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(&features[i * dims], last, dims));
      total += nearest[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double running = 0.0;
      chosen = count - 1;
      for (std::size_t i = 0; i < count; ++i) {
        running += nearest[i];
        if (running > target && nearest[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      // Fewer distinct feature vectors than k; the duplicate center never wins a tie.
      chosen = pick(rng);
    }
    std::copy_n(&features[chosen * dims], dims, &centers[static_cast<std::size_t>(j) * dims]);
  }
  return centers;
}

}  // namespace

SegmentationMap KMeansSegmenter::segment(const raster::BiTemporalPair& pair, int k,
                                         std::uint64_t seed) const {
  pair.validate();
  const std::size_t count = pair.t0.pixel_count();
  if (k < 1) {
    throw InvalidArgument("segmentation needs k >= 1, got " + std::to_string(k));
  }
  if (static_cast<std::size_t>(k) > count) {
    throw InvalidArgument("segmentation k=" + std::to_string(k) + " exceeds the " +
                          std::to_string(count) + " pixels of the image");
  }
  SegmentationMap result{ClassMap(pair.height(), pair.width(), 1, 0), k};
  if (k == 1) {
    return result;
  }

  int dims = 0;
  const std::vector<double> features = pixel_features(pair, options_.coord_weight, dims);
  std::mt19937_64 rng(seed);
  std::vector<double> centers = kmeans_plus_plus(features, count, dims, k, rng);

  auto labels = result.labels.values();
  std::fill(labels.begin(), labels.end(), -1);
  std::vector<double> sums(centers.size());
  std::vector<std::size_t> sizes(k);
  for (int iter = 0; iter < options_.max_iterations; ++iter) {
    std::vector<std::uint8_t> moved_flags(count, 0);
    parallel_for(count, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double* f = &features[i * dims];
        int best = 0;
        double best_d = squared_distance(f, &centers[0], dims);
        for (int j = 1; j < k; ++j) {
          const double d = squared_distance(f, &centers[static_cast<std::size_t>(j) * dims], dims);
          if (d < best_d) {
            best_d = d;
            best = j;
          }
        }
        if (labels[i] != best) {
          labels[i] = best;
          moved_flags[i] = 1;
        }
      }
    });
    if (std::find(moved_flags.begin(), moved_flags.end(), 1) == moved_flags.end()) {
      break;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = static_cast<std::size_t>(labels[i]);
      ++sizes[j];
      for (int d = 0; d < dims; ++d) sums[j * dims + d] += features[i * dims + d];
    }
    for (int j = 0; j < k; ++j) {
      if (sizes[j] == 0) continue;  // empty cluster keeps its previous center
      for (int d = 0; d < dims; ++d) {
        centers[static_cast<std::size_t>(j) * dims + d] =
            sums[static_cast<std::size_t>(j) * dims + d] / static_cast<double>(sizes[j]);
      }
    }
  }
  return result;
}

SegmentationMap segment(const raster::BiTemporalPair& pair, int k, std::uint64_t seed,
                        const KMeansOptions& options) {
  return KMeansSegmenter(options).segment(pair, k, seed);
}

}  // namespace tslcd::segmentation
