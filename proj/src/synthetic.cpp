// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include "tslcd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tslcd::synthetic {

namespace {

using Rng = std::mt19937_64;

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Sum of bilinearly interpolated random lattices, roughly in [-1, 1].
class ValueNoise {
 public:
  ValueNoise(Rng& rng, int size, std::vector<int> cells) : size_(size) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double amp = 1.0;
    for (int g : cells) {
      Octave o{g, amp, std::vector<double>(static_cast<std::size_t>(g + 1) * (g + 1))};
      for (auto& v : o.lattice) v = unit(rng);
      norm_ += amp;
      amp *= 0.65;
      octaves_.push_back(std::move(o));
    }
  }

  double at(double row, double col) const {
    double sum = 0.0;
    for (const auto& o : octaves_) {
      const double y = std::clamp(row / size_ * o.cells, 0.0, o.cells - 1e-9);
      const double x = std::clamp(col / size_ * o.cells, 0.0, o.cells - 1e-9);
      const int iy = static_cast<int>(y);
      const int ix = static_cast<int>(x);
      const double fy = smoothstep(y - iy);
      const double fx = smoothstep(x - ix);
      auto v = [&](int r, int c) { return o.lattice[static_cast<std::size_t>(r) * (o.cells + 1) + c]; };
      const double top = v(iy, ix) * (1 - fx) + v(iy, ix + 1) * fx;
      const double bottom = v(iy + 1, ix) * (1 - fx) + v(iy + 1, ix + 1) * fx;
      sum += o.amplitude * (top * (1 - fy) + bottom * fy);
    }
    return sum / norm_;
  }

 private:
  struct Octave {
    int cells;
    double amplitude;
    std::vector<double> lattice;
  };
  int size_;
  double norm_ = 0.0;
  std::vector<Octave> octaves_;
};

struct Shape {
  bool ellipse = false;
  double cy = 0, cx = 0;  // center
  double hy = 0, hx = 0;  // half extents / semi-axes

  bool contains(int r, int c) const {
    const double dy = (r + 0.5 - cy) / hy;
    const double dx = (c + 0.5 - cx) / hx;
    return ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
  }
  double area() const { return ellipse ? 3.14159265358979 * hy * hx : 4.0 * hy * hx; }
};

bool wants(const SceneOptions& o, const char* kind) {
  return std::find(o.pseudo_changes.begin(), o.pseudo_changes.end(), kind) != o.pseudo_changes.end();
}

// Pixels within `buffer` of a set pixel of `mask`.
bool near_mask(const LabelMap& mask, const Shape& s, int buffer) {
  const int r0 = std::max(0, static_cast<int>(s.cy - s.hy) - buffer);
  const int r1 = std::min(mask.height() - 1, static_cast<int>(s.cy + s.hy) + buffer);
  const int c0 = std::max(0, static_cast<int>(s.cx - s.hx) - buffer);
  const int c1 = std::min(mask.width() - 1, static_cast<int>(s.cx + s.hx) + buffer);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (mask.at(r, c) != 0) return true;
  return false;
}

}  // namespace

SyntheticScene generate_synthetic(const SceneOptions& options) {
  if (options.size < 16) throw InvalidArgument("synthetic scenes must be at least 16 pixels wide");
  if (!(options.change_fraction > 0.0 && options.change_fraction <= 0.3)) {
    throw InvalidArgument("change fraction must lie in (0, 0.3]");
  }
  if (options.bands < 1) throw InvalidArgument("synthetic scenes need at least one band");
  const int size = options.size;
  const int bands = options.bands;
  Rng rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Land-cover mosaic: warped Voronoi cells, each painted with one of a few class colors.
  constexpr int kClasses = 6;
  const int cells = std::max(4, size * size / 4500);
  std::vector<std::vector<double>> palette(kClasses, std::vector<double>(bands));
  for (auto& color : palette)
    for (auto& v : color) v = 0.15 + 0.7 * unit(rng);
  std::vector<double> seed_y(cells), seed_x(cells);
  std::vector<int> seed_class(cells);
  for (int i = 0; i < cells; ++i) {
    seed_y[i] = unit(rng) * size;
    seed_x[i] = unit(rng) * size;
    seed_class[i] = static_cast<int>(unit(rng) * kClasses) % kClasses;
  }
  const ValueNoise warp_y(rng, size, {3, 6});
  const ValueNoise warp_x(rng, size, {3, 6});
  std::vector<ValueNoise> texture;
  std::vector<ValueNoise> change_texture;
  for (int b = 0; b < bands; ++b) texture.emplace_back(rng, size, std::vector<int>{8, 16, 32, 64});
  for (int b = 0; b < bands; ++b) change_texture.emplace_back(rng, size, std::vector<int>{16, 32, 64});

  ClassMap cover(size, size);
  Image base(size, size, bands);
  const double warp_amp = size / 16.0;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double y = r + warp_amp * warp_y.at(r, c);
      const double x = c + warp_amp * warp_x.at(r, c);
      int best = 0;
      double best_d = 1e300;
      for (int i = 0; i < cells; ++i) {
        const double d = (y - seed_y[i]) * (y - seed_y[i]) + (x - seed_x[i]) * (x - seed_x[i]);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      cover.at(r, c) = seed_class[best];
      for (int b = 0; b < bands; ++b) {
        base.at(r, c, b) = static_cast<float>(palette[seed_class[best]][b] + 0.08 * texture[b].at(r, c));
      }
    }
  }

  // True changes: rectangles and ellipses of new material, sized to hit the target area.
  SyntheticScene scene;
  scene.ground_truth = LabelMap(size, size);
  scene.pseudo_change_mask = LabelMap(size, size);
  Image after = base;
  const double target = options.change_fraction * size * size;
  const int shape_count = 5;
  std::vector<Shape> shapes;
  std::size_t changed = 0;
  auto paint = [&](const Shape& s) {
    std::vector<double> color(bands);
    const int under = cover.at(std::clamp(static_cast<int>(s.cy), 0, size - 1),
                               std::clamp(static_cast<int>(s.cx), 0, size - 1));
    for (int attempt = 0; attempt < 64; ++attempt) {
      double dist = 0.0;
      for (int b = 0; b < bands; ++b) {
        color[b] = 0.1 + 0.8 * unit(rng);
        dist += (color[b] - palette[under][b]) * (color[b] - palette[under][b]);
      }
      if (std::sqrt(dist / bands) > 0.25) break;
    }
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        if (!s.contains(r, c) || scene.ground_truth.at(r, c)) continue;
        scene.ground_truth.at(r, c) = kChanged;
        ++changed;
        for (int b = 0; b < bands; ++b) {
          after.at(r, c, b) = static_cast<float>(color[b] + 0.06 * change_texture[b].at(r, c));
        }
      }
    }
  };
  auto place = [&](Shape s) {
    for (int attempt = 0; attempt < 500; ++attempt) {
      s.cy = s.hy + 4 + unit(rng) * (size - 2 * s.hy - 8);
      s.cx = s.hx + 4 + unit(rng) * (size - 2 * s.hx - 8);
      if (!near_mask(scene.ground_truth, s, 3)) {
        paint(s);
        shapes.push_back(s);
        return true;
      }
    }
    return false;
  };
  for (int i = 0; i < shape_count; ++i) {
    Shape s;
    s.ellipse = i % 2 == 1;
    const double area = target / shape_count;
    const double aspect = 0.6 + unit(rng);
    const double scale = s.ellipse ? 3.14159265358979 : 4.0;
    s.hy = std::sqrt(area / scale * aspect);
    s.hx = area / scale / s.hy;
    place(s);
  }
  // Top up with a rectangle so the changed area lands on the target.
  for (int round = 0; round < 4 && changed < 0.98 * target; ++round) {
    const double deficit = target - static_cast<double>(changed);
    Shape s;
    s.hy = std::max(1.0, std::sqrt(deficit / 4.0));
    s.hx = std::max(1.0, deficit / 4.0 / s.hy);
    if (!place(s)) break;
  }

  // Sensor noise on both dates, then pseudo-changes on t1 only.
  Image before = base;
  std::normal_distribution<double> noise(0.0, options.noise);
  if (wants(options, "noise") && options.noise > 0.0) {
    for (float& v : before.values()) v += static_cast<float>(noise(rng));
    for (float& v : after.values()) v += static_cast<float>(noise(rng));
  }
  if (wants(options, "tint")) {
    std::vector<double> offset(bands);
    for (auto& o : offset) o = 0.06 * (unit(rng) - 0.5);
    const double gain = 1.0 + 0.1 * (unit(rng) - 0.5);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c)
        for (int b = 0; b < bands; ++b)
          after.at(r, c, b) = static_cast<float>(after.at(r, c, b) * gain + offset[b]);
  }
  if (wants(options, "shadow")) {
    for (int i = 0, placed = 0; i < 200 && placed < 2; ++i) {
      Shape s;
      s.ellipse = true;
      s.hy = size / 14.0 + unit(rng) * size / 20.0;
      s.hx = size / 14.0 + unit(rng) * size / 20.0;
      s.cy = s.hy + unit(rng) * (size - 2 * s.hy);
      s.cx = s.hx + unit(rng) * (size - 2 * s.hx);
      if (near_mask(scene.ground_truth, s, 3) || near_mask(scene.pseudo_change_mask, s, 3)) continue;
      for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
          const double dy = (r + 0.5 - s.cy) / s.hy;
          const double dx = (c + 0.5 - s.cx) / s.hx;
          const double rho = std::sqrt(dy * dy + dx * dx);
          if (rho >= 1.0) continue;
          const double falloff = rho <= 0.6 ? 1.0 : smoothstep((1.0 - rho) / 0.4);
          scene.pseudo_change_mask.at(r, c) = 1;
          for (int b = 0; b < bands; ++b) {
            after.at(r, c, b) = static_cast<float>(after.at(r, c, b) * (1.0 - options.shadow_depth * falloff));
          }
        }
      }
      ++placed;
    }
  }

  auto quantize = [](Image& image) {
    for (float& v : image.values()) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f);
  };
  quantize(before);
  quantize(after);
  scene.pair = {std::move(before), std::move(after)};
  return scene;
}

}  // namespace tslcd::synthetic
