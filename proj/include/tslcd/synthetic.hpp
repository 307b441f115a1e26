// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tslcd/raster.hpp"

namespace tslcd::synthetic {

struct SceneOptions {
  std::uint64_t seed = 1;
  int size = 256;
  int bands = 3;
  /// Target fraction of pixels inside true-change regions, in (0, 0.3].
  double change_fraction = 0.05;
  /// Any of "tint" (global radiometric shift of t1), "shadow" (soft elliptical darkening) and
  /// "noise" (independent per-date sensor noise).
  std::vector<std::string> pseudo_changes{"tint", "shadow", "noise"};
  /// Standard deviation of the sensor noise, in [0, 1] intensity units.
  double noise = 0.06;
  /// Fractional darkening at a shadow core.
  double shadow_depth = 0.25;
};

/// A bi-temporal pair with 8-bit valued (0..255) bands, its ground truth, and the mask of
/// pseudo-change pixels that are deliberately absent from the ground truth.
struct SyntheticScene {
  raster::BiTemporalPair pair;
  LabelMap ground_truth;
  LabelMap pseudo_change_mask;
};

/// Land-cover mosaic with multi-scale texture at t0; t1 replaces the texture inside rectangles
/// and ellipses (true change) and adds the requested pseudo-changes away from them.
/// Deterministic per seed.
SyntheticScene generate_synthetic(const SceneOptions& options);

}  // namespace tslcd::synthetic
