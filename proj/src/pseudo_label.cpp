// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tslcd/parallel.hpp"

namespace tslcd::pseudo_label {

RealMap cva_magnitude(const raster::BiTemporalPair& pair) {
  pair.validate();
  RealMap out(pair.height(), pair.width());
  const int bands = pair.bands();
  const auto t0 = pair.t0.values();
  const auto t1 = pair.t1.values();
  auto dst = out.values();
  parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double s = 0.0;
      for (int b = 0; b < bands; ++b) {
        const double d = static_cast<double>(t1[i * bands + b]) - t0[i * bands + b];
        s += d * d;
      }
      dst[i] = std::sqrt(s);
    }
  });
  return out;
}

double otsu_threshold(const RealMap& magnitude, int bins) {
  if (bins < 2) throw InvalidArgument("Otsu needs at least 2 histogram bins");
  const auto values = magnitude.values();
  if (values.empty()) throw InvalidArgument("Otsu threshold of an empty map");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw InvalidArgument("Otsu threshold of a constant map is undefined");

  const double width = (hi - lo) / bins;
  std::vector<double> hist(bins, 0.0);
  for (double v : values) {
    const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
    hist[b] += 1.0;
  }
  double total = 0.0;
  double total_moment = 0.0;
  for (int b = 0; b < bins; ++b) {
    total += hist[b];
    total_moment += hist[b] * (b + 0.5);
  }

  // between[t]: classes are bins [0, t) and [t, bins), in bin-center units.
  std::vector<double> between(bins, -1.0);
  double w0 = 0.0;
  double m0 = 0.0;
  double best = -1.0;
  for (int t = 1; t < bins; ++t) {
    w0 += hist[t - 1];
    m0 += hist[t - 1] * (t - 0.5);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double diff = m0 / w0 - (total_moment - m0) / w1;
    between[t] = w0 * w1 * diff * diff;
    best = std::max(best, between[t]);
  }
  int first = -1;
  int last = -1;
  for (int t = 1; t < bins; ++t) {
    if (between[t] >= 0.0 && between[t] >= best * (1.0 - 1e-12)) {
      if (first < 0) first = t;
      last = t;
    }
  }
  return lo + width * 0.5 * (first + last);
}

LabelMap make_pseudo_labels(const RealMap& magnitude, double threshold, double margin) {
  if (!(margin >= 0.0 && margin < 0.5)) {
    throw InvalidArgument("pseudo-label margin must lie in [0, 0.5), got " +
                          std::to_string(margin));
  }
  const double upper = threshold * (1.0 + margin);
  const double lower = threshold * (1.0 - margin);
  LabelMap labels(magnitude.height(), magnitude.width());
  const auto src = magnitude.values();
  auto dst = labels.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] >= upper ? kChanged : (src[i] <= lower ? kUnchanged : kUnknown);
  }
  return labels;
}

std::vector<TrainingCenter> select_training_centers(const LabelMap& pseudo,
                                                    const TrainingSetOptions& options) {
  if (options.samples_per_class < 1) {
    throw InvalidArgument("samples_per_class must be positive");
  }
  std::vector<TrainingCenter> pools[2];
  for (int r = 0; r < pseudo.height(); ++r) {
    for (int c = 0; c < pseudo.width(); ++c) {
      const std::uint8_t v = pseudo.at(r, c);
      if (v == kUnchanged || v == kChanged) pools[v].push_back({r, c, v});
    }
  }
  if (pools[kUnchanged].empty() || pools[kChanged].empty()) {
    throw InvalidArgument("pseudo labels hold only one confident class (" +
                          std::to_string(pools[kUnchanged].size()) + " unchanged, " +
                          std::to_string(pools[kChanged].size()) + " changed)");
  }

  std::mt19937_64 rng(options.seed);
  std::vector<TrainingCenter> out;
  auto draw = [&](const std::vector<TrainingCenter>& pool, std::size_t count) {
    if (count <= pool.size()) {
      std::vector<TrainingCenter> copy = pool;
      // Partial Fisher-Yates: first `count` entries become a uniform sample without replacement.
      for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, copy.size() - 1);
        std::swap(copy[i], copy[pick(rng)]);
      }
      out.insert(out.end(), copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(count));
    } else {
      out.insert(out.end(), pool.begin(), pool.end());
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t i = pool.size(); i < count; ++i) out.push_back(pool[pick(rng)]);
    }
  };

  const auto per_class = static_cast<std::size_t>(options.samples_per_class);
  if (options.balance) {
    draw(pools[kUnchanged], per_class);
    draw(pools[kChanged], per_class);
  } else {
    std::vector<TrainingCenter> all = pools[kUnchanged];
    all.insert(all.end(), pools[kChanged].begin(), pools[kChanged].end());
    draw(all, std::min(all.size(), 2 * per_class));
  }
  return out;
}

}  // namespace tslcd::pseudo_label
