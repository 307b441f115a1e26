// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tslcd/raster.hpp"
#include "tslcd/segmentation.hpp"

namespace tslcd::sampling {

enum class Date : std::uint8_t { kT0 = 0, kT1 = 1 };

struct PairSample {
  raster::Patch patch_a;
  raster::Patch patch_b;
  /// 1 when both centers carry the same segmentation class, else 0.
  std::uint8_t label = 0;
  Date date_a = Date::kT0;
  Date date_b = Date::kT0;
};

struct PairDataset {
  std::vector<PairSample> samples;
  int similar = 0;      // m_s
  int dissimilar = 0;   // m_d
  int patch_size = 0;   // n
  int bands = 0;
  double purity = 0.0;  // p
};

struct Center {
  int row = 0;
  int col = 0;
  std::int32_t cls = 0;
};

/// Fraction of the n x n window of `labels` centered at (row, col) that shares the center's class.
/// The window must lie inside `labels`; the center counts in numerator and denominator.
double patch_purity(const ClassMap& labels, int row, int col, int n);

/// purity >= p.
bool is_reliable(const ClassMap& labels, int row, int col, int n, double p);

/// All source pixels whose reflect-padded window passes is_reliable, in raster order.
std::vector<Center> reliable_centers(const segmentation::SegmentationMap& seg, int n, double p);

struct SamplingRequest {
  int patch_size = 7;
  double purity = 0.7;
  int similar = 4000;
  int dissimilar = 4000;
  std::uint64_t seed = 0;
};

/// Draws ordered center pairs uniformly among the reliable centers, without replacement unless
/// the pool of pairs is smaller than the request. Each patch is cut from t0 or t1 with
/// probability 1/2. `pair` should already be normalized.
PairDataset sample_pairs(const segmentation::SegmentationMap& seg,
                         const raster::BiTemporalPair& pair, const SamplingRequest& request);

/// Binary cache: "TSLP", u16 version, u32 n, u32 m_s, u32 m_d, u32 bands, f32 p, then per sample
/// u8 label, u8 date_a, u8 date_b, u8 reserved, i32 row_a, col_a, row_b, col_b and the two
/// band-major f32 patch tensors. Little-endian throughout.
void save_dataset(const PairDataset& dataset, const std::filesystem::path& path);
PairDataset load_dataset(const std::filesystem::path& path);

}  // namespace tslcd::sampling
