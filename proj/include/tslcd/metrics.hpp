// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tslcd/grid.hpp"

namespace tslcd::metrics {

/// Positive means changed.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  /// Ground-truth pixels marked unknown and left out of the counts.
  std::uint64_t excluded = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
};

/// Throws on shape mismatch or when `pred` holds anything but 0/1. Unknown ground-truth pixels
/// are excluded and tallied in `excluded`.
ConfusionCounts confusion(const LabelMap& pred, const LabelMap& gt);

struct CountAndRate {
  std::uint64_t count = 0;
  double rate = 0.0;
};

/// (fp + fn) / total.
double overall_error(const ConfusionCounts& c);
/// fn and fn / (fn + tp).
CountAndRate missed_detection(const ConfusionCounts& c);
/// fp and fp / (fp + tn).
CountAndRate false_alarm(const ConfusionCounts& c);
/// Cohen's kappa. When chance agreement is 1 the value is 1 for perfect agreement and 0
/// otherwise, and a warning is logged.
double kappa(const ConfusionCounts& c);

/// Ordered key=value lines; `prefix` is prepended to every key.
std::vector<std::pair<std::string, std::string>> report_entries(const ConfusionCounts& c,
                                                                const std::string& prefix);

}  // namespace tslcd::metrics
