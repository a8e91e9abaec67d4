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

#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "mmfusion/error.hpp"
#include "mmfusion/geometry.hpp"
#include "mmfusion/kitti_io.hpp"
#include "mmfusion/nn/tensor.hpp"
#include "mmfusion/synthetic.hpp"

namespace {

using namespace mmfusion;

std::vector<std::byte> pack_floats(std::initializer_list<float> values) {
  std::vector<std::byte> out;
  for (float f : values) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::byte>((bits >> (8 * k)) & 0xFF));
  }
  return out;
}

const char* kCalibFixture =
    "P0: 7.070493e+02 0.000000e+00 6.040814e+02 0.000000e+00 0.000000e+00 7.070493e+02 "
    "1.805066e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00\n"
    "P1: 7.070493e+02 0.000000e+00 6.040814e+02 -3.797842e+02 0.000000e+00 7.070493e+02 "
    "1.805066e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00\n"
    "P2: 7.070493e+02 0.000000e+00 6.040814e+02 4.575831e+01 0.000000e+00 7.070493e+02 "
    "1.805066e+02 -3.454157e-01 0.000000e+00 0.000000e+00 1.000000e+00 4.981016e-03\n"
    "P3: 7.070493e+02 0.000000e+00 6.040814e+02 -3.341081e+02 0.000000e+00 7.070493e+02 "
    "1.805066e+02 2.330660e+00 0.000000e+00 0.000000e+00 1.000000e+00 3.201153e-03\n"
    "R0_rect: 9.999128e-01 1.009263e-02 -8.511932e-03 -1.012729e-02 9.999406e-01 "
    "-4.037671e-03 8.470675e-03 4.123522e-03 9.999556e-01\n"
    "Tr_velo_to_cam: 6.927964e-03 -9.999722e-01 -2.757829e-03 -2.457729e-02 "
    "-1.162982e-03 2.749836e-03 -9.999955e-01 -6.127237e-02 9.999753e-01 6.931141e-03 "
    "-1.143899e-03 -3.321029e-01\n"
    "Tr_imu_to_velo: 9.999976e-01 7.553071e-04 -2.035826e-03 -8.086759e-01 -7.854027e-04 "
    "9.998898e-01 -1.482298e-02 3.195559e-01 2.024406e-03 1.482454e-02 9.998881e-01 "
    "-7.997231e-01\n";

TEST(PointCloudFile, EmptyInputGivesNoPoints) {
  EXPECT_TRUE(kitti::parse_point_cloud({}).points.empty());
}

TEST(PointCloudFile, SingleHandEncodedRecord) {
  const auto raw = pack_floats({1.0f, 2.0f, 3.0f, 0.5f});
  const PointCloud pc = kitti::parse_point_cloud(raw);
  ASSERT_EQ(pc.points.size(), 1u);
  EXPECT_EQ(pc.points[0].x, 1.0);
  EXPECT_EQ(pc.points[0].y, 2.0);
  EXPECT_EQ(pc.points[0].z, 3.0);
  EXPECT_EQ(pc.points[0].reflectance, 0.5);
}

TEST(PointCloudFile, LengthNotMultipleOfSixteenIsFormatError) {
  std::vector<std::byte> raw(17);
  EXPECT_THROW(kitti::parse_point_cloud(raw), FormatError);
}

TEST(PointCloudFile, NonFiniteValueReportsRecordIndex) {
  auto raw = pack_floats({1, 2, 3, 0.5f, 1, std::numeric_limits<float>::quiet_NaN(), 3, 0.5f});
  try {
    kitti::parse_point_cloud(raw);
    FAIL() << "expected RecordError";
  } catch (const RecordError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(PointCloudFile, RoundTripKeepsOrderAndCount) {
  nn::Rng rng(5);
  PointCloud pc;
  for (int i = 0; i < 257; ++i) {
    pc.points.push_back({static_cast<float>(rng.uniform(-50, 50)), static_cast<float>(rng.uniform(-50, 50)),
                         static_cast<float>(rng.uniform(-3, 2)), static_cast<float>(rng.uniform())});
  }
  const auto raw = kitti::serialize_point_cloud(pc);
  EXPECT_EQ(raw.size(), 16u * pc.points.size());
  const PointCloud back = kitti::parse_point_cloud(raw);
  ASSERT_EQ(back.points.size(), pc.points.size());
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    EXPECT_EQ(back.points[i].x, pc.points[i].x);
    EXPECT_EQ(back.points[i].reflectance, pc.points[i].reflectance);
  }
}

TEST(CalibrationFile, FixtureValuesElementWise) {
  const Calibration c = kitti::parse_calibration(kCalibFixture);
  EXPECT_DOUBLE_EQ(c.p2(0, 0), 707.0493);
  EXPECT_DOUBLE_EQ(c.p2(0, 2), 604.0814);
  EXPECT_DOUBLE_EQ(c.p2(0, 3), 45.75831);
  EXPECT_DOUBLE_EQ(c.p2(1, 3), -0.3454157);
  EXPECT_DOUBLE_EQ(c.p2(2, 3), 0.004981016);
  EXPECT_DOUBLE_EQ(c.r0_rect(0, 1), 0.01009263);
  EXPECT_DOUBLE_EQ(c.r0_rect(2, 2), 0.9999556);
  EXPECT_DOUBLE_EQ(c.tr_velo_to_cam(0, 1), -0.9999722);
  EXPECT_DOUBLE_EQ(c.tr_velo_to_cam(2, 3), -0.3321029);
}

TEST(CalibrationFile, IdentityRectification) {
  std::string text = kCalibFixture;
  const auto pos = text.find("R0_rect:");
  const auto end = text.find('\n', pos);
  text.replace(pos, end - pos, "R0_rect: 1 0 0 0 1 0 0 0 1");
  EXPECT_TRUE(kitti::parse_calibration(text).r0_rect.isIdentity(0));
}

TEST(CalibrationFile, MissingKeyIsNamed) {
  std::string text = kCalibFixture;
  const auto pos = text.find("P2:");
  text.erase(pos, text.find('\n', pos) - pos + 1);
  try {
    kitti::parse_calibration(text);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("P2"), std::string::npos);
  }
}

TEST(CalibrationFile, WrongValueCount) {
  EXPECT_THROW(kitti::parse_calibration("P2: 1 2 3\nR0_rect: 1 0 0 0 1 0 0 0 1\n"
                                        "Tr_velo_to_cam: 0 0 0 0 0 0 0 0 0 0 0 0\n"),
               FormatError);
}

TEST(CalibrationFile, WriteParseRoundTrip) {
  const Calibration c = synth::synthetic_calibration();
  const Calibration back = kitti::parse_calibration(kitti::write_calibration(c));
  EXPECT_LT((back.p2 - c.p2).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((back.tr_velo_to_cam - c.tr_velo_to_cam).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LabelFile, EmptyTextGivesNoObjects) { EXPECT_TRUE(kitti::parse_labels("").empty()); }

TEST(LabelFile, FieldOrderIsHeightWidthLength) {
  const auto objs = kitti::parse_labels(
      "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.50 1.60 3.90 1.84 1.47 8.41 0.01\n");
  ASSERT_EQ(objs.size(), 1u);
  EXPECT_EQ(objs[0].class_name, "Car");
  EXPECT_DOUBLE_EQ(objs[0].h, 1.5);
  EXPECT_DOUBLE_EQ(objs[0].w, 1.6);
  EXPECT_DOUBLE_EQ(objs[0].l, 3.9);
  EXPECT_DOUBLE_EQ(objs[0].x, 1.84);
  EXPECT_DOUBLE_EQ(objs[0].z, 8.41);
  EXPECT_DOUBLE_EQ(objs[0].rotation_y, 0.01);
  EXPECT_DOUBLE_EQ(objs[0].bbox_height(), 200.12 - 173.33);
  EXPECT_FALSE(objs[0].score.has_value());
}

TEST(LabelFile, DontCareIsKept) {
  const auto objs = kitti::parse_labels(
      "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10\n");
  ASSERT_EQ(objs.size(), 1u);
  EXPECT_EQ(objs[0].class_name, "DontCare");
}

TEST(LabelFile, ShortLineReportsLineNumber) {
  try {
    kitti::parse_labels("Car 0 0 0 0 0 10 10 1.5 1.6 3.9 0 1.6 10 0\n"
                        "Car 0 0 0 0 0 10 10 1.5 1.6 3.9 0 1.6 10\n");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(DetectionFile, EmptyListGivesEmptyText) {
  EXPECT_EQ(kitti::write_detections({}, synth::synthetic_calibration()), "");
}

TEST(DetectionFile, OneDetectionHasSixteenFields) {
  const std::vector<Detection> dets{{Box3D(12, 1, -0.9, 3.9, 1.6, 1.5, 0.3), 0.87, "Car"}};
  const std::string text = kitti::write_detections(dets, synth::synthetic_calibration());
  std::istringstream in(text);
  std::string tok;
  int n = 0;
  while (in >> tok) ++n;
  EXPECT_EQ(n, 16);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(DetectionFile, RandomRoundTripWithinTolerance) {
  const Calibration calib = synth::synthetic_calibration();
  nn::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Box3D b(rng.uniform(5, 60), rng.uniform(-20, 20), rng.uniform(-2, 0), rng.uniform(3, 5),
                  rng.uniform(1.4, 2), rng.uniform(1.3, 1.8), rng.uniform(-3.1, 3.1));
    const std::vector<Detection> dets{{b, rng.uniform(), "Car"}};
    const auto objs = kitti::parse_labels(kitti::write_detections(dets, calib));
    ASSERT_EQ(objs.size(), 1u);
    const geometry::CameraPose pose = geometry::camera_pose_from_box(b, calib);
    EXPECT_EQ(objs[0].class_name, "Car");
    EXPECT_NEAR(objs[0].l, b.l, 1e-3);
    EXPECT_NEAR(objs[0].w, b.w, 1e-3);
    EXPECT_NEAR(objs[0].h, b.h, 1e-3);
    EXPECT_NEAR(objs[0].x, pose.x, 1e-3);
    EXPECT_NEAR(objs[0].y, pose.y, 1e-3);
    EXPECT_NEAR(objs[0].z, pose.z, 1e-3);
    EXPECT_NEAR(objs[0].rotation_y, pose.rotation_y, 1e-3);
    const Box3D back = geometry::box_from_label(objs[0], calib);
    EXPECT_NEAR(back.x, b.x, 1e-3);
    EXPECT_NEAR(back.y, b.y, 1e-3);
    EXPECT_NEAR(back.z, b.z, 1e-3);
    EXPECT_NEAR(std::remainder(back.yaw - b.yaw, 2 * std::numbers::pi), 0.0, 1e-3);
  }
}

TEST(DetectionFile, NonFiniteFieldIsRejected) {
  const std::vector<Detection> dets{{Box3D(12, 1, -0.9, 3.9, 1.6, 1.5, 0.3), std::nan(""), "Car"}};
  EXPECT_THROW(kitti::write_detections(dets, synth::synthetic_calibration()), Error);
}

TEST(LabelFile, WriteParseRoundTrip) {
  GroundTruthObject o;
  o.class_name = "Van";
  o.truncation = 0.25;
  o.occlusion = 2;
  o.alpha = -1.2;
  o.left = 10;
  o.top = 20;
  o.right = 110.5;
  o.bottom = 90.25;
  o.h = 2.1;
  o.w = 1.9;
  o.l = 5.2;
  o.x = -3.3;
  o.y = 1.7;
  o.z = 25.4;
  o.rotation_y = 1.1;
  const auto back = kitti::parse_labels(kitti::write_labels(std::vector{o}));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].occlusion, 2);
  EXPECT_NEAR(back[0].truncation, 0.25, 1e-9);
  EXPECT_NEAR(back[0].bottom, 90.25, 1e-9);
  EXPECT_NEAR(back[0].rotation_y, 1.1, 1e-9);
}

TEST(GroundPlaneFile, AlreadyNormalized) {
  const GroundPlane p = kitti::parse_ground_plane("0 -1 0 1.65");
  EXPECT_DOUBLE_EQ(p.a, 0);
  EXPECT_DOUBLE_EQ(p.b, -1);
  EXPECT_DOUBLE_EQ(p.c, 0);
  EXPECT_DOUBLE_EQ(p.d, 1.65);
}

TEST(GroundPlaneFile, ScaleIsNormalized) {
  const GroundPlane p = kitti::parse_ground_plane("# Plane\nWidth 4\nHeight 1\n0 -2 0 3.3\n");
  EXPECT_DOUBLE_EQ(p.b, -1);
  EXPECT_DOUBLE_EQ(p.d, 1.65);
}

TEST(GroundPlaneFile, SignFlipKeepsTheSamePlane) {
  const GroundPlane raw{0, 1, 0, -1.65};
  const GroundPlane p = kitti::parse_ground_plane("0 1 0 -1.65");
  EXPECT_DOUBLE_EQ(p.b, -1);
  EXPECT_DOUBLE_EQ(p.d, 1.65);
  nn::Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const double x = rng.uniform(-10, 10), z = rng.uniform(0, 50);
    const double y = 1.65;  // on the plane
    EXPECT_NEAR(raw.a * x + raw.b * y + raw.c * z + raw.d, 0, 1e-12);
    EXPECT_NEAR(p.a * x + p.b * y + p.c * z + p.d, 0, 1e-12);
  }
}

TEST(GroundPlaneFile, TooFewNumbers) {
  EXPECT_THROW(kitti::parse_ground_plane("0 -1 0"), FormatError);
}

TEST(GroundPlaneFile, NormalizationIsIdempotent) {
  nn::Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const GroundPlane p{rng.uniform(-1, 1), rng.uniform(-3, 3), rng.uniform(-1, 1), rng.uniform(-5, 5)};
    const GroundPlane once = kitti::normalize_plane(p);
    const GroundPlane twice = kitti::normalize_plane(once);
    EXPECT_NEAR(std::sqrt(once.a * once.a + once.b * once.b + once.c * once.c), 1.0, 1e-12);
    EXPECT_LE(once.b, 0.0);
    EXPECT_NEAR(twice.a, once.a, 1e-12);
    EXPECT_NEAR(twice.b, once.b, 1e-12);
    EXPECT_NEAR(twice.c, once.c, 1e-12);
    EXPECT_NEAR(twice.d, once.d, 1e-12);
  }
}

}  // namespace
