// Copyright 2026 The mmfusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mmfusion/geometry.hpp"
#include "mmfusion/overlap_nms.hpp"
#include "oracles.hpp"

namespace {

using namespace mmfusion;
using overlap::Label;
constexpr double kPi = std::numbers::pi;

Box3D random_box(nn::Rng& rng, double spread = 3) {
  return Box3D(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-0.5, 0.5),
               rng.uniform(1, 5), rng.uniform(0.8, 2.5), rng.uniform(1, 2), rng.uniform(-kPi, kPi));
}

TEST(AxisAlignedIou, Cases) {
  EXPECT_DOUBLE_EQ(overlap::iou_axis_aligned({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0);
  EXPECT_NEAR(overlap::iou_axis_aligned({0, 0, 2, 2}, {1, 1, 3, 3}), 1.0 / 7.0, 1e-12);
  EXPECT_EQ(overlap::iou_axis_aligned({0, 0, 1, 1}, {1, 0, 2, 1}), 0.0);
  EXPECT_EQ(overlap::iou_axis_aligned({0, 0, 1, 1}, {5, 5, 6, 6}), 0.0);
}

TEST(RotatedIou, HalfTurnIsTheSameFootprint) {
  const Box3D a(1, 2, 0, 4, 2, 1.5, 0.3), b(1, 2, 0, 4, 2, 1.5, 0.3 + kPi);
  EXPECT_NEAR(overlap::iou_rotated_bev(a, b), 1.0, 1e-12);
}

TEST(RotatedIou, SquareAgainstEighthTurn) {
  const Box3D a(0, 0, 0, 2, 2, 1, 0), b(0, 0, 0, 2, 2, 1, kPi / 4);
  const double inter = 8 * (std::sqrt(2.0) - 1);
  EXPECT_NEAR(overlap::iou_rotated_bev(a, b), inter / (8 - inter), 1e-12);
  EXPECT_NEAR(overlap::iou_rotated_bev(a, b), 0.70711, 1e-4);
}

TEST(RotatedIou, EighthTurnMonteCarloCrossCheck) {
  const Box3D a(0, 0, 0, 2, 2, 1, 0), b(0, 0, 0, 2, 2, 1, kPi / 4);
  nn::Rng rng(1);
  long inter = 0, uni = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double x = rng.uniform(-1.5, 1.5), y = rng.uniform(-1.5, 1.5);
    const bool ia = oracle::inside_footprint(a, x, y), ib = oracle::inside_footprint(b, x, y);
    inter += ia && ib;
    uni += ia || ib;
  }
  EXPECT_NEAR(overlap::iou_rotated_bev(a, b), static_cast<double>(inter) / uni, 2e-3);
}

TEST(RotatedIou, MatchesRasterOracle) {
  nn::Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Box3D a = random_box(rng), b = random_box(rng);
    EXPECT_NEAR(overlap::iou_rotated_bev(a, b), oracle::raster_iou_bev(a, b, 400), 1e-2);
  }
}

TEST(RotatedIou, ReducesToAxisAlignedAtZeroYaw) {
  nn::Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    Box3D a = random_box(rng), b = random_box(rng);
    a.yaw = 0;
    b.yaw = 0;
    const Rect2D ra = geometry::footprint_bounds(a), rb = geometry::footprint_bounds(b);
    EXPECT_NEAR(overlap::iou_rotated_bev(a, b), overlap::iou_axis_aligned(ra, rb), 1e-12);
  }
}

TEST(RotatedIou, SymmetricAndRigidMotionInvariant) {
  nn::Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const Box3D a = random_box(rng), b = random_box(rng);
    const double iou = overlap::iou_rotated_bev(a, b);
    EXPECT_NEAR(iou, overlap::iou_rotated_bev(b, a), 1e-12);
    const double t = rng.uniform(-kPi, kPi), tx = rng.uniform(-10, 10), ty = rng.uniform(-10, 10);
    auto move = [&](const Box3D& q) {
      return Box3D(std::cos(t) * q.x - std::sin(t) * q.y + tx, std::sin(t) * q.x + std::cos(t) * q.y + ty,
                   q.z, q.l, q.w, q.h, q.yaw + t);
    };
    EXPECT_NEAR(overlap::iou_rotated_bev(move(a), move(b)), iou, 1e-9);
  }
}

TEST(Iou3d, Cases) {
  const Box3D a(0, 0, 0, 4, 2, 2, 0.2);
  EXPECT_NEAR(overlap::iou_3d(a, a), 1.0, 1e-12);
  const Box3D half(0, 0, 1, 4, 2, 2, 0.2);
  EXPECT_NEAR(overlap::iou_3d(a, half), 1.0 / 3.0, 1e-12);
  const Box3D above(0, 0, 5, 4, 2, 2, 0.2);
  EXPECT_EQ(overlap::iou_3d(a, above), 0.0);
}

TEST(Iou3d, SymmetricAndBoundedByBev) {
  nn::Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Box3D a = random_box(rng), b = random_box(rng);
    EXPECT_NEAR(overlap::iou_3d(a, b), overlap::iou_3d(b, a), 1e-12);
    EXPECT_NEAR(overlap::iou_bev_bounds(a, b), overlap::iou_bev_bounds(b, a), 1e-12);
    EXPECT_GE(overlap::iou_3d(a, b), 0.0);
    EXPECT_LE(overlap::iou_3d(a, b), 1.0 + 1e-12);
  }
}

TEST(AssignTargets, NoGroundTruthIsAllNegative) {
  const std::vector<Box3D> anchors{Box3D(0, 0, 0, 4, 2, 1, 0), Box3D(5, 0, 0, 4, 2, 1, 0)};
  const auto as = overlap::assign_targets(anchors, {}, 0.6, 0.4, overlap::iou_bev_bounds);
  for (const auto& a : as) {
    EXPECT_EQ(a.label, Label::kNegative);
    EXPECT_EQ(a.max_iou, 0.0);
    EXPECT_FALSE(a.matched_gt.has_value());
  }
}

TEST(AssignTargets, ExactMatchIsPositive) {
  const std::vector<Box3D> gts{Box3D(9, 9, 0, 4, 2, 1, 0), Box3D(0, 0, 0, 4, 2, 1, 0)};
  const std::vector<Box3D> anchors{Box3D(0, 0, 0, 4, 2, 1, 0)};
  const auto as = overlap::assign_targets(anchors, gts, 0.6, 0.4, overlap::iou_bev_bounds);
  EXPECT_EQ(as[0].label, Label::kPositive);
  EXPECT_EQ(as[0].max_iou, 1.0);
  EXPECT_EQ(as[0].matched_gt, 1u);
}

TEST(AssignTargets, HalfOverlapIsIgnored) {
  // [0,3]x[0,1] against [1,4]x[0,1]: intersection 2, union 4
  const std::vector<Box3D> gts{Box3D(1.5, 0.5, 0, 3, 1, 1, 0)};
  const std::vector<Box3D> anchors{Box3D(2.5, 0.5, 0, 3, 1, 1, 0)};
  const auto as = overlap::assign_targets(anchors, gts, 0.6, 0.4, overlap::iou_bev_bounds);
  EXPECT_NEAR(as[0].max_iou, 0.5, 1e-12);
  EXPECT_EQ(as[0].label, Label::kIgnored);
  const auto dh = overlap::assign_targets(anchors, gts, 0.5, 0.5, overlap::iou_bev_bounds);
  EXPECT_EQ(dh[0].label, Label::kPositive);
}

TEST(AssignTargets, LabelsFollowThresholds) {
  nn::Rng rng(6);
  std::vector<Box3D> anchors, gts;
  for (int i = 0; i < 200; ++i) anchors.push_back(random_box(rng, 6));
  for (int i = 0; i < 5; ++i) gts.push_back(random_box(rng, 6));
  const auto as = overlap::assign_targets(anchors, gts, 0.6, 0.4, overlap::iou_rotated_bev);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    double best = 0;
    for (const Box3D& g : gts) best = std::max(best, overlap::iou_rotated_bev(anchors[i], g));
    EXPECT_NEAR(as[i].max_iou, best, 1e-12);
    const Label want = best >= 0.6 ? Label::kPositive : best < 0.4 ? Label::kNegative : Label::kIgnored;
    EXPECT_EQ(as[i].label, want);
  }
}

TEST(Nms, SingleBoxKept) {
  const std::vector<Box3D> boxes{Box3D(0, 0, 0, 4, 2, 1, 0)};
  const std::vector<double> scores{0.3};
  EXPECT_EQ(overlap::nms(boxes, scores, 0.7, overlap::iou_rotated_bev), std::vector<std::size_t>{0});
}

TEST(Nms, DuplicateKeepsHigherScore) {
  const std::vector<Box3D> boxes{Box3D(0, 0, 0, 4, 2, 1, 0), Box3D(0, 0, 0, 4, 2, 1, 0)};
  const std::vector<double> scores{0.8, 0.9};
  EXPECT_EQ(overlap::nms(boxes, scores, 0.7, overlap::iou_rotated_bev), std::vector<std::size_t>{1});
}

TEST(Nms, EqualIouSurvives) {
  const std::vector<Box3D> boxes{Box3D(1.5, 0.5, 0, 3, 1, 1, 0), Box3D(2.5, 0.5, 0, 3, 1, 1, 0)};
  const std::vector<double> scores{0.9, 0.8};
  EXPECT_EQ(overlap::nms(boxes, scores, 0.5, overlap::iou_bev_bounds).size(), 2u);
}

TEST(Nms, TiesBrokenByLowerIndex) {
  const std::vector<Box3D> boxes{Box3D(0, 0, 0, 4, 2, 1, 0), Box3D(0.1, 0, 0, 4, 2, 1, 0)};
  const std::vector<double> scores{0.5, 0.5};
  EXPECT_EQ(overlap::nms(boxes, scores, 0.5, overlap::iou_rotated_bev), std::vector<std::size_t>{0});
}

TEST(Nms, RandomScenesMatchReference) {
  nn::Rng rng(7);
  for (int scene = 0; scene < 50; ++scene) {
    const int n = 1 + static_cast<int>(rng.below(50));
    std::vector<Box3D> boxes;
    std::vector<double> scores;
    for (int i = 0; i < n; ++i) {
      boxes.push_back(random_box(rng, 6));
      scores.push_back(std::round(rng.uniform() * 20) / 20);
    }
    for (double thr : {0.01, 0.3, 0.7}) {
      const auto got = overlap::nms(boxes, scores, thr, overlap::iou_rotated_bev);
      EXPECT_EQ(got, oracle::nms(boxes, scores, thr, overlap::iou_rotated_bev));
      EXPECT_EQ(overlap::nms_bev_bounds(boxes, scores, thr),
                oracle::nms(boxes, scores, thr, overlap::iou_bev_bounds));
      for (std::size_t i = 0; i < got.size(); ++i) {
        if (i > 0) EXPECT_GE(scores[got[i - 1]], scores[got[i]]);
        for (std::size_t j = i + 1; j < got.size(); ++j)
          EXPECT_LE(overlap::iou_rotated_bev(boxes[got[i]], boxes[got[j]]), thr);
      }
    }
  }
}

TEST(Nms, MaxKeepTruncatesThePrefix) {
  nn::Rng rng(8);
  std::vector<Box3D> boxes;
  std::vector<double> scores;
  for (int i = 0; i < 40; ++i) {
    boxes.push_back(random_box(rng, 20));
    scores.push_back(rng.uniform());
  }
  const auto all = overlap::nms_bev_bounds(boxes, scores, 0.7);
  const auto some = overlap::nms_bev_bounds(boxes, scores, 0.7, 5);
  ASSERT_EQ(some.size(), std::min<std::size_t>(5, all.size()));
  EXPECT_TRUE(std::equal(some.begin(), some.end(), all.begin()));
}

}  // namespace
