// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "tslcd/synthetic.hpp"

namespace tslcd::synthetic {
namespace {

std::size_t count(const LabelMap& map) {
  std::size_t n = 0;
  for (std::uint8_t v : map.values()) n += v == kChanged ? 1 : 0;
  return n;
}

TEST(Synthetic, ChangedAreaHitsTarget) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    SceneOptions options;
    options.seed = seed;
    const SyntheticScene scene = generate_synthetic(options);
    // 5% of 256^2 = 3277 +/- 10%.
    const std::size_t changed = count(scene.ground_truth);
    EXPECT_GE(changed, 2953u) << "seed " << seed;
    EXPECT_LE(changed, 3604u) << "seed " << seed;
  }
}

TEST(Synthetic, ShapesAndValueRange) {
  const SyntheticScene scene = generate_synthetic({});
  EXPECT_EQ(scene.pair.t0.height(), 256);
  EXPECT_EQ(scene.pair.t0.channels(), 3);
  EXPECT_TRUE(scene.pair.t0.same_shape(scene.pair.t1));
  EXPECT_TRUE(scene.ground_truth.same_extent(scene.pair.t0));
  for (const Image* image : {&scene.pair.t0, &scene.pair.t1})
    for (float v : image->values()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 255.0f);
      EXPECT_EQ(v, std::round(v));
    }
}

TEST(Synthetic, DeterministicPerSeed) {
  SceneOptions options;
  options.size = 64;
  const SyntheticScene a = generate_synthetic(options);
  const SyntheticScene b = generate_synthetic(options);
  EXPECT_EQ(a.pair.t0, b.pair.t0);
  EXPECT_EQ(a.pair.t1, b.pair.t1);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  options.seed = 2;
  EXPECT_FALSE(generate_synthetic(options).pair.t0 == a.pair.t0);
}

TEST(Synthetic, WithoutPseudoChangesOnlyTruthDiffers) {
  SceneOptions options;
  options.pseudo_changes.clear();
  const SyntheticScene scene = generate_synthetic(options);
  std::size_t differing = 0;
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c) {
      bool same = true;
      for (int b = 0; b < 3; ++b) same = same && scene.pair.t0.at(r, c, b) == scene.pair.t1.at(r, c, b);
      if (!same) {
        ++differing;
        EXPECT_EQ(scene.ground_truth.at(r, c), kChanged) << r << "," << c;
      }
    }
  EXPECT_GT(differing, 0u);
  EXPECT_EQ(count(scene.pseudo_change_mask), 0u);
}

TEST(Synthetic, ShadowsAvoidTruthAndDarkenT1) {
  SceneOptions options;
  options.pseudo_changes = {"shadow"};
  const SyntheticScene scene = generate_synthetic(options);
  ASSERT_GT(count(scene.pseudo_change_mask), 0u);
  double before = 0.0, after = 0.0;
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c) {
      if (!scene.pseudo_change_mask.at(r, c)) continue;
      EXPECT_EQ(scene.ground_truth.at(r, c), kUnchanged);
      for (int b = 0; b < 3; ++b) {
        before += scene.pair.t0.at(r, c, b);
        after += scene.pair.t1.at(r, c, b);
      }
    }
  EXPECT_LT(after, before);
}

TEST(Synthetic, RejectsBadOptions) {
  SceneOptions options;
  options.size = 8;
  EXPECT_THROW(generate_synthetic(options), InvalidArgument);
  options = {};
  options.change_fraction = 0.0;
  EXPECT_THROW(generate_synthetic(options), InvalidArgument);
}

}  // namespace
}  // namespace tslcd::synthetic
