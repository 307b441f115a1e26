// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "tslcd/grid.hpp"

namespace tslcd::raster {

/// Two co-registered images of the same scene at different dates.
struct BiTemporalPair {
  Image t0;
  Image t1;

  int height() const { return t0.height(); }
  int width() const { return t0.width(); }
  int bands() const { return t0.channels(); }

  /// Throws InvalidArgument unless both dates share a shape, all values are finite and
  /// the images are at least min_extent pixels on each side.
  void validate(int min_extent = 1) const;
};

/// An n x n x B window of an image. Values are band-major:
/// values[(band * size + row) * size + col].
struct Patch {
  int size = 0;
  int bands = 0;
  int center_row = 0;
  int center_col = 0;
  std::vector<float> values;

  float at(int band, int row, int col) const {
    return values[(static_cast<std::size_t>(band) * size + row) * size + col];
  }
};

/// Reads an 8-bit or 16-bit PNG/TIFF. Three and four channel images are returned in RGB(A) order.
Image load_image(const std::filesystem::path& path);
BiTemporalPair load_pair(const std::filesystem::path& path_t0, const std::filesystem::path& path_t1);

/// Writes an image as 8-bit PNG/TIFF; values are rounded and clamped to [0, 255].
void write_image(const Image& image, const std::filesystem::path& path);

/// Zero mean, unit variance per band and per date. Constant bands become zero.
Image normalize(const Image& image);
BiTemporalPair normalize(const BiTemporalPair& pair);

/// Mirrors the border without repeating the edge pixel: row [a, b, c] with radius 1 becomes
/// [b, a, b, c, b].
template <typename T>
Grid<T> pad_reflect(const Grid<T>& image, int radius);

/// Source index for position i of an axis of the given length under reflect-101 padding.
int reflect_index(int i, int length);

/// The n x n window of `image` centered at (row, col), both in `image` coordinates.
Patch extract_patch(const Image& image, int row, int col, int n);

/// An image reflect-padded once so a patch can be cut around every source pixel.
class PaddedImage {
 public:
  PaddedImage() = default;
  PaddedImage(const Image& source, int patch_size);

  int radius() const { return radius_; }
  int patch_size() const { return 2 * radius_ + 1; }
  const Image& padded() const { return padded_; }

  /// Patch centered on source pixel (row, col); the patch records source coordinates.
  Patch patch_at(int row, int col) const;
  /// Writes the band-major patch values straight into `out` (bands * n * n floats).
  void copy_patch(int row, int col, std::span<float> out) const;

 private:
  Image padded_;
  int radius_ = 0;
  int source_height_ = 0;
  int source_width_ = 0;
};

/// Binary change map to a single-band 8-bit PNG with 0 -> 0 and 1 -> 255.
void write_change_map(const LabelMap& map, const std::filesystem::path& path);
LabelMap read_change_map(const std::filesystem::path& path);

/// Three-level map (0/1/2 as unchanged/changed/unknown) to gray levels 0/255/128.
void write_label_preview(const LabelMap& map, const std::filesystem::path& path);

/// Class ids as gray levels; ids must be below 256.
void write_class_map(const ClassMap& map, const std::filesystem::path& path);
ClassMap read_class_map(const std::filesystem::path& path);

/// Single-band 32-bit float TIFF, exact round trip for float values.
void write_float_tiff(const Grid<float>& map, const std::filesystem::path& path);
Grid<float> read_float_tiff(const std::filesystem::path& path);

}  // namespace tslcd::raster
