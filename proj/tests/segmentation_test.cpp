// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "tslcd/segmentation.hpp"

namespace tslcd::segmentation {
namespace {

raster::BiTemporalPair two_halves(int size) {
  Image image(size, size, 3);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      for (int b = 0; b < 3; ++b) image.at(r, c, b) = c < size / 2 ? -1.0f : 1.0f;
  return {image, image};
}

raster::BiTemporalPair noisy(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  Image t0(size, size, 3), t1(size, size, 3);
  for (float& v : t0.values()) v = n(rng);
  for (float& v : t1.values()) v = n(rng);
  return {t0, t1};
}

TEST(Segment, SplitsTwoFlatHalves) {
  const SegmentationMap seg = segment(two_halves(16), 2, 7);
  EXPECT_EQ(seg.classes, 2);
  EXPECT_EQ(seg.distinct_labels(), 2);
  const int left = seg.labels.at(0, 0);
  const int right = seg.labels.at(0, 15);
  EXPECT_NE(left, right);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) EXPECT_EQ(seg.labels.at(r, c), c < 8 ? left : right);
}

TEST(Segment, LabelsStayInRangeAndAreDeterministic) {
  const auto pair = noisy(20, 3);
  const SegmentationMap a = segment(pair, 6, 11);
  const SegmentationMap b = segment(pair, 6, 11);
  EXPECT_EQ(a.labels, b.labels);
  for (std::int32_t v : a.labels.values()) {
    EXPECT_GE(v, 0);
    EXPECT_LT(v, 6);
  }
  EXPECT_GE(a.distinct_labels(), 1);
  EXPECT_LE(a.distinct_labels(), 6);
}

TEST(Segment, UsesBothDates) {
  // t0 is flat; only t1 separates the halves.
  auto pair = two_halves(12);
  pair.t0 = Image(12, 12, 3, 0.0f);
  const SegmentationMap seg = segment(pair, 2, 1);
  EXPECT_NE(seg.labels.at(5, 0), seg.labels.at(5, 11));
}

TEST(Segment, SingleClassIsAllZero) {
  const SegmentationMap seg = segment(noisy(8, 1), 1, 0);
  for (std::int32_t v : seg.labels.values()) EXPECT_EQ(v, 0);
  EXPECT_EQ(seg.distinct_labels(), 1);
}

TEST(Segment, RejectsBadK) {
  const auto pair = noisy(4, 1);
  EXPECT_THROW(segment(pair, 0, 0), InvalidArgument);
  EXPECT_THROW(segment(pair, 17, 0), InvalidArgument);
  EXPECT_NO_THROW(segment(pair, 16, 0));
}

TEST(Segment, SegmenterInterfaceMatchesFreeFunction) {
  const auto pair = noisy(10, 5);
  const KMeansSegmenter segmenter;
  const Segmenter& base = segmenter;
  EXPECT_EQ(base.segment(pair, 4, 9).labels, segment(pair, 4, 9).labels);
}

}  // namespace
}  // namespace tslcd::segmentation
