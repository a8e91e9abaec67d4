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
#include "mmfusion/nn/tensor.hpp"
#include "mmfusion/synthetic.hpp"

namespace {

using namespace mmfusion;
using geometry::box_to_bev_rect;
using geometry::box_to_corners;
constexpr double kPi = std::numbers::pi;

// f = 100, principal point (50, 50); LIDAR and camera frames coincide.
Calibration pinhole(double focal = 100) {
  Calibration c;
  c.p2 << focal, 0, 50, 0, 0, focal, 50, 0, 0, 0, 1, 0;
  c.r0_rect.setIdentity();
  c.tr_velo_to_cam << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0;
  return c;
}

double shoelace(const std::array<Eigen::Vector2d, 4>& p) {
  double s = 0;
  for (int i = 0; i < 4; ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % 4];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * s;
}

TEST(Projection, AxisPointLandsOnPrincipalPoint) {
  const auto pt = geometry::project_to_image({0, 0, 10}, pinhole());
  EXPECT_NEAR(pt.u, 50, 1e-12);
  EXPECT_NEAR(pt.v, 50, 1e-12);
  EXPECT_NEAR(pt.depth, 10, 1e-12);
  EXPECT_FALSE(pt.behind_camera);
}

TEST(Projection, NegativeDepthIsFlagged) {
  EXPECT_TRUE(geometry::project_to_image({0.3, 0.2, -1}, pinhole()).behind_camera);
}

TEST(Projection, DoublingFocalDoublesOffsets) {
  const Eigen::Vector3d p(1.3, -0.7, 8);
  const auto a = geometry::project_to_image(p, pinhole(100));
  const auto b = geometry::project_to_image(p, pinhole(200));
  EXPECT_NEAR(b.u - 50, 2 * (a.u - 50), 1e-9);
  EXPECT_NEAR(b.v - 50, 2 * (a.v - 50), 1e-9);
}

TEST(Projection, CloudProjectionMatchesSinglePoint) {
  PointCloud pc;
  pc.points = {{1, 2, 12, 0}, {-3, 1, 4, 0}};
  const auto pts = geometry::lidar_to_image(pc, pinhole());
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].u, 50 + 100 * 1.0 / 12, 1e-9);
  EXPECT_NEAR(pts[1].v, 50 + 100 * 1.0 / 4, 1e-9);
}

TEST(Corners, UnitCubeAtOrigin) {
  const auto c = box_to_corners(Box3D(0, 0, 0, 1, 1, 1, 0));
  for (const auto& p : c) {
    EXPECT_NEAR(std::abs(p.x()), 0.5, 1e-12);
    EXPECT_NEAR(std::abs(p.y()), 0.5, 1e-12);
    EXPECT_NEAR(std::abs(p.z()), 0.5, 1e-12);
  }
  // bottom face counter-clockwise from (+l/2, +w/2), then the top face
  EXPECT_NEAR(c[0].x(), 0.5, 1e-12);
  EXPECT_NEAR(c[0].y(), 0.5, 1e-12);
  EXPECT_NEAR(c[0].z(), -0.5, 1e-12);
  EXPECT_NEAR(c[1].x(), -0.5, 1e-12);
  EXPECT_NEAR(c[1].y(), 0.5, 1e-12);
  EXPECT_NEAR(c[4].z(), 0.5, 1e-12);
}

TEST(Corners, QuarterTurnSwapsFootprintExtents) {
  const auto b0 = geometry::footprint_bounds(Box3D(0, 0, 0, 4, 2, 1.5, 0));
  const auto b1 = geometry::footprint_bounds(Box3D(0, 0, 0, 4, 2, 1.5, kPi / 2));
  EXPECT_NEAR(b0.u_max - b0.u_min, 4, 1e-12);
  EXPECT_NEAR(b0.v_max - b0.v_min, 2, 1e-12);
  EXPECT_NEAR(b1.u_max - b1.u_min, 2, 1e-12);
  EXPECT_NEAR(b1.v_max - b1.v_min, 4, 1e-12);
}

TEST(Corners, EighthTurnDiamond) {
  const auto fp = geometry::box_footprint(Box3D(0, 0, 0, std::sqrt(2.0), std::sqrt(2.0), 1, kPi / 4));
  // rotating (+-sqrt2/2, +-sqrt2/2) by 45 degrees gives the unit diamond
  const std::array<Eigen::Vector2d, 4> expected{Eigen::Vector2d(0, 1), Eigen::Vector2d(-1, 0),
                                                Eigen::Vector2d(0, -1), Eigen::Vector2d(1, 0)};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(fp[i].x(), expected[i].x(), 1e-12);
    EXPECT_NEAR(fp[i].y(), expected[i].y(), 1e-12);
  }
}

TEST(Corners, CentroidAndFootprintAreaProperties) {
  nn::Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const Box3D b(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-3, 3), rng.uniform(0.5, 6),
                  rng.uniform(0.5, 3), rng.uniform(0.5, 3), rng.uniform(-kPi, kPi));
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& p : box_to_corners(b)) sum += p;
    sum /= 8;
    EXPECT_LE((sum - Eigen::Vector3d(b.x, b.y, b.z)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(shoelace(geometry::box_footprint(b)), b.l * b.w, 1e-9);
  }
}

TEST(Box, YawIsNormalized) {
  EXPECT_NEAR(Box3D(0, 0, 0, 1, 1, 1, 3 * kPi / 2).yaw, -kPi / 2, 1e-12);
  EXPECT_NEAR(Box3D(0, 0, 0, 1, 1, 1, -kPi).yaw, kPi, 1e-12);
}

TEST(BevRect, CellArithmetic) {
  const auto r = box_to_bev_rect(Box3D(35.2, 0, -1, 4, 2, 1.5, 0), BevGridSpec::full_scale());
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(r->u_min, 332, 1e-9);
  EXPECT_NEAR(r->u_max, 372, 1e-9);
  EXPECT_NEAR(r->v_min, 390, 1e-9);
  EXPECT_NEAR(r->v_max, 410, 1e-9);
}

TEST(BevRect, OutsideGridIsSignalled) {
  EXPECT_FALSE(box_to_bev_rect(Box3D(-20, 0, -1, 4, 2, 1.5, 0), BevGridSpec::full_scale()).has_value());
  EXPECT_FALSE(box_to_bev_rect(Box3D(30, 60, -1, 4, 2, 1.5, 0), BevGridSpec::full_scale()).has_value());
}

TEST(BevRect, PartiallyOutsideIsClamped) {
  const auto r = box_to_bev_rect(Box3D(0.5, 0, -1, 4, 2, 1.5, 0), BevGridSpec::full_scale());
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->u_min, 0);
  EXPECT_NEAR(r->u_max, 25, 1e-9);
}

TEST(BevRect, QuarterTurnSwapsSides) {
  const auto g = BevGridSpec::full_scale();
  const auto a = *box_to_bev_rect(Box3D(30, 5, -1, 4, 2, 1.5, 0), g);
  const auto b = *box_to_bev_rect(Box3D(30, 5, -1, 4, 2, 1.5, kPi / 2), g);
  EXPECT_NEAR(a.u_max - a.u_min, b.v_max - b.v_min, 1e-9);
  EXPECT_NEAR(a.v_max - a.v_min, b.u_max - b.u_min, 1e-9);
}

TEST(BevRect, MatchesCornerBoundOracle) {
  const auto g = BevGridSpec::full_scale();
  nn::Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    const Box3D b(rng.uniform(3, 67), rng.uniform(-37, 37), -1, rng.uniform(1, 6), rng.uniform(1, 3), 1.5,
                  rng.uniform(-kPi, kPi));
    double umin = 1e9, umax = -1e9, vmin = 1e9, vmax = -1e9;
    for (const auto& p : box_to_corners(b)) {
      umin = std::min(umin, (p.x() - g.x_min) / g.resolution);
      umax = std::max(umax, (p.x() - g.x_min) / g.resolution);
      vmin = std::min(vmin, (p.y() - g.y_min) / g.resolution);
      vmax = std::max(vmax, (p.y() - g.y_min) / g.resolution);
    }
    const auto r = *box_to_bev_rect(b, g);
    EXPECT_NEAR(r.u_min, umin, 1e-9);
    EXPECT_NEAR(r.u_max, umax, 1e-9);
    EXPECT_NEAR(r.v_min, vmin, 1e-9);
    EXPECT_NEAR(r.v_max, vmax, 1e-9);
  }
}

TEST(ImageRoi, BoxAheadIsCentredOnPrincipalPoint) {
  // camera frame == LIDAR frame here, so "ahead" is +z; the box's l runs along x.
  const auto roi = geometry::box_to_image_roi(Box3D(0, 0, 10, 2, 2, 2, 0), pinhole(), {1000, 1000});
  ASSERT_TRUE(roi.has_value());
  // nearest face at depth 9: corners at +-1 -> 50 +- 100/9
  EXPECT_NEAR(roi->u_min, 50 - 100.0 / 9, 1e-9);
  EXPECT_NEAR(roi->u_max, 50 + 100.0 / 9, 1e-9);
  EXPECT_NEAR(roi->v_min, 50 - 100.0 / 9, 1e-9);
  EXPECT_NEAR(roi->v_max, 50 + 100.0 / 9, 1e-9);
  EXPECT_NEAR(0.5 * (roi->u_min + roi->u_max), 50, 1e-9);
}

TEST(ImageRoi, BehindCameraIsNotVisible) {
  EXPECT_FALSE(geometry::box_to_image_roi(Box3D(0, 0, -10, 2, 2, 2, 0), pinhole(), {100, 100}).has_value());
}

TEST(ImageRoi, EnlargingTheBoxNeverShrinksTheRoi) {
  const Calibration calib = synth::synthetic_calibration();
  nn::Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Box3D b(rng.uniform(5, 40), rng.uniform(-10, 10), -0.9, rng.uniform(2, 5), rng.uniform(1, 2),
                  rng.uniform(1, 2), rng.uniform(-kPi, kPi));
    const double k = rng.uniform(1, 1.5);
    const Box3D big(b.x, b.y, b.z, b.l * k, b.w * k, b.h * k, b.yaw);
    const auto r0 = geometry::box_to_image_roi(b, calib, {1242, 375});
    const auto r1 = geometry::box_to_image_roi(big, calib, {1242, 375});
    if (!r0) continue;
    ASSERT_TRUE(r1.has_value());
    EXPECT_LE(r1->u_min, r0->u_min + 1e-9);
    EXPECT_LE(r1->v_min, r0->v_min + 1e-9);
    EXPECT_GE(r1->u_max, r0->u_max - 1e-9);
    EXPECT_GE(r1->v_max, r0->v_max - 1e-9);
  }
}

TEST(LabelPose, CameraPoseRoundTrip) {
  const Calibration calib = synth::synthetic_calibration();
  nn::Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const Box3D b(rng.uniform(5, 40), rng.uniform(-10, 10), rng.uniform(-1.5, 0), 4, 1.7, 1.5,
                  rng.uniform(-kPi, kPi));
    const auto pose = geometry::camera_pose_from_box(b, calib);
    GroundTruthObject o;
    o.class_name = "Car";
    o.l = b.l;
    o.w = b.w;
    o.h = b.h;
    o.x = pose.x;
    o.y = pose.y;
    o.z = pose.z;
    o.rotation_y = pose.rotation_y;
    const Box3D back = geometry::box_from_label(o, calib);
    EXPECT_NEAR(back.x, b.x, 1e-9);
    EXPECT_NEAR(back.y, b.y, 1e-9);
    EXPECT_NEAR(back.z, b.z, 1e-9);
    EXPECT_NEAR(std::remainder(back.yaw - b.yaw, 2 * kPi), 0, 1e-9);
  }
}

}  // namespace
