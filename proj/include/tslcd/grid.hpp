// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tslcd/error.hpp"

namespace tslcd {

/// Dense row-major raster with interleaved channels: element (row, col, ch) lives at
/// ((row * width) + col) * channels + ch.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 1) {
      throw InvalidArgument("grid dimensions must be non-negative with at least one channel");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int row, int col, int ch = 0) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }
  T& at(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
  const T& at(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

  bool contains(int row, int col) const {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return height_ == other.height() && width_ == other.width() && channels_ == other.channels();
  }
  template <typename U>
  bool same_extent(const Grid<U>& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  std::string shape_string() const {
    return std::to_string(height_) + "x" + std::to_string(width_) + "x" + std::to_string(channels_);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using Image = Grid<float>;
using RealMap = Grid<double>;
using ClassMap = Grid<std::int32_t>;

/// Per-pixel change labels.
enum Label : std::uint8_t { kUnchanged = 0, kChanged = 1, kUnknown = 2 };
using LabelMap = Grid<std::uint8_t>;

}  // namespace tslcd
