// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace tslcd::raster {

namespace {

std::string describe(const Image& image) {
  return image.shape_string() + " (HxWxB)";
}

cv::Mat read_mat(const std::filesystem::path& path, int flags) {
  if (!std::filesystem::exists(path)) {
    throw IoError("cannot read '" + path.string() + "': file does not exist");
  }
  cv::Mat mat = cv::imread(path.string(), flags);
  if (mat.empty()) {
    throw IoError("cannot decode '" + path.string() + "' as a raster image");
  }
  return mat;
}

void write_mat(const cv::Mat& mat, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write '" + path.string() + "': " + e.what());
  }
  if (!ok) {
    throw IoError("cannot write '" + path.string() + "'");
  }
}

}  // namespace

void BiTemporalPair::validate(int min_extent) const {
  if (!t0.same_shape(t1)) {
    throw InvalidArgument("image dimension mismatch: t0 is " + describe(t0) + ", t1 is " +
                          describe(t1));
  }
  if (t0.height() < min_extent || t0.width() < min_extent) {
    throw InvalidArgument("images are " + describe(t0) + " but must be at least " +
                          std::to_string(min_extent) + " pixels on each side");
  }
  for (const Image* image : {&t0, &t1}) {
    for (float v : image->values()) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("image contains non-finite values");
      }
    }
  }
}

Image load_image(const std::filesystem::path& path) {
  cv::Mat mat = read_mat(path, cv::IMREAD_UNCHANGED);
  if (mat.depth() != CV_8U && mat.depth() != CV_16U) {
    throw IoError("'" + path.string() + "' is not an 8-bit or 16-bit raster");
  }
  const int bands = mat.channels();
  if (bands == 3 || bands == 4) {
    std::vector<cv::Mat> planes;
    cv::split(mat, planes);
    std::swap(planes[0], planes[2]);
    cv::merge(planes, mat);
  }
  cv::Mat as_float;
  mat.convertTo(as_float, CV_MAKETYPE(CV_32F, bands));
  Image image(as_float.rows, as_float.cols, bands);
  for (int r = 0; r < as_float.rows; ++r) {
    const float* src = as_float.ptr<float>(r);
    std::copy(src, src + static_cast<std::size_t>(as_float.cols) * bands, &image.at(r, 0));
  }
  return image;
}

BiTemporalPair load_pair(const std::filesystem::path& path_t0,
                         const std::filesystem::path& path_t1) {
  BiTemporalPair pair{load_image(path_t0), load_image(path_t1)};
  if (!pair.t0.same_shape(pair.t1)) {
    throw InvalidArgument("image dimension mismatch: '" + path_t0.string() + "' is " +
                          describe(pair.t0) + ", '" + path_t1.string() + "' is " +
                          describe(pair.t1));
  }
  return pair;
}

void write_image(const Image& image, const std::filesystem::path& path) {
  const int bands = image.channels();
  if (bands != 1 && bands != 3 && bands != 4) {
    throw InvalidArgument("only 1, 3 or 4 band images can be written as PNG");
  }
  cv::Mat mat(image.height(), image.width(), CV_MAKETYPE(CV_8U, bands));
  for (int r = 0; r < image.height(); ++r) {
    auto* dst = mat.ptr<std::uint8_t>(r);
    for (int c = 0; c < image.width(); ++c) {
      for (int b = 0; b < bands; ++b) {
        // OpenCV stores BGR(A).
        const int src_band = (bands >= 3 && b < 3) ? 2 - b : b;
        const float v = std::clamp(image.at(r, c, src_band), 0.0f, 255.0f);
        dst[c * bands + b] = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  write_mat(mat, path);
}

Image normalize(const Image& image) {
  Image out(image.height(), image.width(), image.channels());
  const std::size_t count = image.pixel_count();
  if (count == 0) {
    return out;
  }
  const int bands = image.channels();
  const auto src = image.values();
  auto dst = out.values();
  for (int b = 0; b < bands; ++b) {
    double sum = 0.0;
    float lo = std::numeric_limits<float>::infinity();
    float hi = -lo;
    for (std::size_t i = 0; i < count; ++i) {
      const float v = src[i * bands + b];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi) {
      continue;  // constant band stays zero
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double d = src[i * bands + b] - mean;
      sq += d * d;
    }
    const double inv_std = 1.0 / std::sqrt(sq / static_cast<double>(count));
    for (std::size_t i = 0; i < count; ++i) {
      dst[i * bands + b] = static_cast<float>((src[i * bands + b] - mean) * inv_std);
    }
  }
  return out;
}

BiTemporalPair normalize(const BiTemporalPair& pair) {
  return {normalize(pair.t0), normalize(pair.t1)};
}

int reflect_index(int i, int length) {
  if (length == 1) {
    return 0;
  }
  const int period = 2 * (length - 1);
  i %= period;
  if (i < 0) {
    i += period;
  }
  return i < length ? i : period - i;
}

template <typename T>
Grid<T> pad_reflect(const Grid<T>& image, int radius) {
  if (radius < 0) {
    throw InvalidArgument("padding radius must be non-negative");
  }
  const int limit = std::min(image.height(), image.width()) - 1;
  if (radius > limit) {
    throw InvalidArgument("padding radius " + std::to_string(radius) + " exceeds " +
                          std::to_string(limit) + " for a " + image.shape_string() + " grid");
  }
  const int bands = image.channels();
  Grid<T> out(image.height() + 2 * radius, image.width() + 2 * radius, bands);
  for (int r = 0; r < out.height(); ++r) {
    const int sr = reflect_index(r - radius, image.height());
    for (int c = 0; c < out.width(); ++c) {
      const int sc = reflect_index(c - radius, image.width());
      for (int b = 0; b < bands; ++b) {
        out.at(r, c, b) = image.at(sr, sc, b);
      }
    }
  }
  return out;
}

template Grid<float> pad_reflect(const Grid<float>&, int);
template Grid<double> pad_reflect(const Grid<double>&, int);
template Grid<std::int32_t> pad_reflect(const Grid<std::int32_t>&, int);
template Grid<std::uint8_t> pad_reflect(const Grid<std::uint8_t>&, int);

Patch extract_patch(const Image& image, int row, int col, int n) {
  if (n < 1 || n % 2 == 0) {
    throw InvalidArgument("patch size must be a positive odd number, got " + std::to_string(n));
  }
  const int r = (n - 1) / 2;
  if (row - r < 0 || col - r < 0 || row + r >= image.height() || col + r >= image.width()) {
    throw InvalidArgument("patch of size " + std::to_string(n) + " centered at (" +
                          std::to_string(row) + ", " + std::to_string(col) +
                          ") leaves the " + image.shape_string() + " image");
  }
  Patch patch{n, image.channels(), row, col, {}};
  patch.values.resize(static_cast<std::size_t>(n) * n * image.channels());
  for (int b = 0; b < image.channels(); ++b) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        patch.values[(static_cast<std::size_t>(b) * n + y) * n + x] =
            image.at(row - r + y, col - r + x, b);
      }
    }
  }
  return patch;
}

PaddedImage::PaddedImage(const Image& source, int patch_size)
    : radius_((patch_size - 1) / 2),
      source_height_(source.height()),
      source_width_(source.width()) {
  if (patch_size < 1 || patch_size % 2 == 0) {
    throw InvalidArgument("patch size must be a positive odd number, got " +
                          std::to_string(patch_size));
  }
  padded_ = pad_reflect(source, radius_);
}

Patch PaddedImage::patch_at(int row, int col) const {
  if (row < 0 || col < 0 || row >= source_height_ || col >= source_width_) {
    throw InvalidArgument("patch center (" + std::to_string(row) + ", " + std::to_string(col) +
                          ") outside the source image");
  }
  Patch patch = extract_patch(padded_, row + radius_, col + radius_, patch_size());
  patch.center_row = row;
  patch.center_col = col;
  return patch;
}

void PaddedImage::copy_patch(int row, int col, std::span<float> out) const {
  const int n = patch_size();
  const int bands = padded_.channels();
  for (int b = 0; b < bands; ++b) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        out[(static_cast<std::size_t>(b) * n + y) * n + x] = padded_.at(row + y, col + x, b);
      }
    }
  }
}

void write_change_map(const LabelMap& map, const std::filesystem::path& path) {
  if (map.channels() != 1) {
    throw InvalidArgument("change map must have a single band");
  }
  cv::Mat mat(map.height(), map.width(), CV_8UC1);
  for (int r = 0; r < map.height(); ++r) {
    auto* dst = mat.ptr<std::uint8_t>(r);
    for (int c = 0; c < map.width(); ++c) {
      const std::uint8_t v = map.at(r, c);
      if (v != kUnchanged && v != kChanged) {
        throw InvalidArgument("change map is not binary at (" + std::to_string(r) + ", " +
                              std::to_string(c) + ")");
      }
      dst[c] = v == kChanged ? 255 : 0;
    }
  }
  write_mat(mat, path);
}

LabelMap read_change_map(const std::filesystem::path& path) {
  cv::Mat mat = read_mat(path, cv::IMREAD_UNCHANGED);
  if (mat.depth() != CV_8U || mat.channels() != 1) {
    throw IoError("'" + path.string() + "' is not a single-band 8-bit change map");
  }
  LabelMap map(mat.rows, mat.cols);
  for (int r = 0; r < mat.rows; ++r) {
    const auto* src = mat.ptr<std::uint8_t>(r);
    for (int c = 0; c < mat.cols; ++c) {
      if (src[c] != 0 && src[c] != 255) {
        throw IoError("'" + path.string() + "' holds value " + std::to_string(src[c]) +
                      "; change maps use only 0 and 255");
      }
      map.at(r, c) = src[c] == 255 ? kChanged : kUnchanged;
    }
  }
  return map;
}

void write_label_preview(const LabelMap& map, const std::filesystem::path& path) {
  cv::Mat mat(map.height(), map.width(), CV_8UC1);
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const std::uint8_t v = map.at(r, c);
      mat.at<std::uint8_t>(r, c) = v == kChanged ? 255 : (v == kUnknown ? 128 : 0);
    }
  }
  write_mat(mat, path);
}

void write_class_map(const ClassMap& map, const std::filesystem::path& path) {
  cv::Mat mat(map.height(), map.width(), CV_8UC1);
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      const std::int32_t v = map.at(r, c);
      if (v < 0 || v > 255) {
        throw InvalidArgument("class id " + std::to_string(v) + " does not fit in 8 bits");
      }
      mat.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(v);
    }
  }
  write_mat(mat, path);
}

ClassMap read_class_map(const std::filesystem::path& path) {
  cv::Mat mat = read_mat(path, cv::IMREAD_UNCHANGED);
  if (mat.depth() != CV_8U || mat.channels() != 1) {
    throw IoError("'" + path.string() + "' is not a single-band 8-bit class map");
  }
  ClassMap map(mat.rows, mat.cols);
  for (int r = 0; r < mat.rows; ++r) {
    for (int c = 0; c < mat.cols; ++c) {
      map.at(r, c) = mat.at<std::uint8_t>(r, c);
    }
  }
  return map;
}

void write_float_tiff(const Grid<float>& map, const std::filesystem::path& path) {
  if (map.channels() != 1) {
    throw InvalidArgument("float TIFF export takes a single band");
  }
  cv::Mat mat(map.height(), map.width(), CV_32FC1);
  for (int r = 0; r < map.height(); ++r) {
    std::copy_n(&map.at(r, 0), map.width(), mat.ptr<float>(r));
  }
  write_mat(mat, path);
}

Grid<float> read_float_tiff(const std::filesystem::path& path) {
  cv::Mat mat = read_mat(path, cv::IMREAD_UNCHANGED);
  if (mat.type() != CV_32FC1) {
    throw IoError("'" + path.string() + "' is not a single-band float32 raster");
  }
  Grid<float> map(mat.rows, mat.cols);
  for (int r = 0; r < mat.rows; ++r) {
    std::copy_n(mat.ptr<float>(r), mat.cols, &map.at(r, 0));
  }
  return map;
}

}  // namespace tslcd::raster
