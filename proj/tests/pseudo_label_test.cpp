// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "tslcd/pseudo_label.hpp"

namespace tslcd::pseudo_label {
namespace {

RealMap row_of(std::initializer_list<double> values) {
  RealMap map(1, static_cast<int>(values.size()));
  int i = 0;
  for (double v : values) map.at(0, i++) = v;
  return map;
}

// Brute force: score every bin edge as a cut by the between-class variance of the binned
// values. Cuts that tie with the best (empty bins between modes) resolve to the middle edge.
double otsu_oracle(const RealMap& map, int bins) {
  const auto v = map.values();
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  const double width = (hi - lo) / bins;
  auto bin_of = [&](double x) { return std::min(bins - 1, static_cast<int>((x - lo) / width)); };
  std::vector<double> score(bins, -1.0);
  for (int t = 1; t < bins; ++t) {
    double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (double x : v) {
      const double center = bin_of(x) + 0.5;
      if (bin_of(x) < t) {
        n0 += 1;
        s0 += center;
      } else {
        n1 += 1;
        s1 += center;
      }
    }
    if (n0 > 0 && n1 > 0) score[t] = n0 * n1 * std::pow(s0 / n0 - s1 / n1, 2);
  }
  const double best = *std::max_element(score.begin(), score.end());
  int first = -1, last = -1;
  for (int t = 1; t < bins; ++t) {
    if (score[t] >= 0 && std::abs(score[t] - best) <= 1e-9 * best) {
      if (first < 0) first = t;
      last = t;
    }
  }
  return lo + width * 0.5 * (first + last);
}

TEST(Cva, IsEuclideanNormOfDifference) {
  Image t0(1, 2, 3, 0.0f), t1(1, 2, 3, 0.0f);
  t1.at(0, 0, 0) = 3.0f;
  t1.at(0, 0, 1) = 4.0f;
  t0.at(0, 1, 2) = 2.0f;
  const RealMap m = cva_magnitude({t0, t1});
  EXPECT_DOUBLE_EQ(m.at(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(m.at(0, 1), 2.0);
}

TEST(Otsu, MatchesBruteForceOnRandomBimodalMaps) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> low(1.0, 0.3), high(4.0, 0.6);
    std::bernoulli_distribution changed(0.2);
    RealMap map(30, 30);
    for (double& x : map.values()) x = std::abs(changed(rng) ? high(rng) : low(rng));
    EXPECT_NEAR(otsu_threshold(map, 64), otsu_oracle(map, 64), 1e-9) << "seed " << seed;
  }
}

TEST(Otsu, SeparatesTwoClusters) {
  const RealMap map = row_of({1, 1, 1, 1.1, 0.9, 9, 9.2, 8.8});
  const double t = otsu_threshold(map);
  EXPECT_GT(t, 1.1);
  EXPECT_LT(t, 8.8);
}

TEST(Otsu, TieRuleIsMirrorSymmetric) {
  // Two equal spikes: every cut between them scores the same, so the threshold lands midway.
  const RealMap map = row_of({0, 0, 0, 10, 10, 10});
  EXPECT_NEAR(otsu_threshold(map), 5.0, 1e-12);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealMap a(10, 10), b(10, 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.values()[i] = u(rng);
    b.values()[i] = 1.0 - a.values()[i];
  }
  EXPECT_NEAR(otsu_threshold(a, 16) + otsu_threshold(b, 16), 1.0, 1e-9);
}

TEST(Otsu, RejectsDegenerateInput) {
  EXPECT_THROW(otsu_threshold(RealMap(3, 3, 1, 2.0)), InvalidArgument);
  EXPECT_THROW(otsu_threshold(RealMap()), InvalidArgument);
  EXPECT_THROW(otsu_threshold(row_of({0, 1}), 1), InvalidArgument);
}

TEST(PseudoLabels, MarginBandBecomesUnknown) {
  const RealMap m = row_of({7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0});
  const LabelMap labels = make_pseudo_labels(m, 10.0, 0.2);
  const std::uint8_t expected[] = {kUnchanged, kUnchanged, kUnknown, kUnknown,
                                   kUnknown,   kChanged,   kChanged};
  for (int i = 0; i < 7; ++i) EXPECT_EQ(labels.at(0, i), expected[i]) << "value " << m.at(0, i);
}

TEST(PseudoLabels, ZeroMarginIsAPlainThreshold) {
  const LabelMap labels = make_pseudo_labels(row_of({0.5, 1.0, 1.5}), 1.0, 0.0);
  EXPECT_EQ(labels.at(0, 0), kUnchanged);
  EXPECT_EQ(labels.at(0, 2), kChanged);
  EXPECT_NE(labels.at(0, 1), kUnknown);
  EXPECT_THROW(make_pseudo_labels(row_of({1.0}), 1.0, 0.5), InvalidArgument);
  EXPECT_THROW(make_pseudo_labels(row_of({1.0}), 1.0, -0.1), InvalidArgument);
}

LabelMap mostly_unchanged(int changed) {
  LabelMap map(20, 20, 1, kUnchanged);
  for (int i = 0; i < changed; ++i) map.values()[i] = kChanged;
  map.values()[399] = kUnknown;
  return map;
}

TEST(TrainingCenters, BalancedSelectionOversamplesTheSmallClass) {
  const LabelMap pseudo = mostly_unchanged(5);
  const auto centers = select_training_centers(pseudo, {50, true, 1});
  ASSERT_EQ(centers.size(), 100u);
  int changed = 0;
  for (const auto& c : centers) {
    EXPECT_EQ(c.label, pseudo.at(c.row, c.col));
    EXPECT_NE(c.label, kUnknown);
    changed += c.label == kChanged;
  }
  EXPECT_EQ(changed, 50);
}

TEST(TrainingCenters, UnbalancedSelectionFollowsThePrior) {
  const auto centers = select_training_centers(mostly_unchanged(5), {1000, false, 1});
  EXPECT_EQ(centers.size(), 399u);
}

TEST(TrainingCenters, DeterministicAndRejectsSingleClass) {
  const LabelMap pseudo = mostly_unchanged(40);
  const auto a = select_training_centers(pseudo, {20, true, 4});
  const auto b = select_training_centers(pseudo, {20, true, 4});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].row, b[i].row);
    EXPECT_EQ(a[i].col, b[i].col);
  }
  EXPECT_THROW(select_training_centers(mostly_unchanged(0), {}), InvalidArgument);
}

}  // namespace
}  // namespace tslcd::pseudo_label
