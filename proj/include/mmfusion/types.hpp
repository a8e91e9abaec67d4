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

#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace mmfusion {

// One LIDAR return in the sensor frame (x forward, y left, z up).
struct LidarPoint {
  float x = 0, y = 0, z = 0;
  float reflectance = 0;
};

struct PointCloud {
  std::vector<LidarPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// KITTI calibration for the left colour camera.
struct Calibration {
  Eigen::Matrix<double, 3, 4> p2 = Eigen::Matrix<double, 3, 4>::Zero();
  Eigen::Matrix3d r0_rect = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> tr_velo_to_cam = Eigen::Matrix<double, 3, 4>::Zero();

  // LIDAR frame -> rectified camera frame and back.
  Eigen::Vector3d velo_to_rect(const Eigen::Vector3d& p) const;
  Eigen::Vector3d rect_to_velo(const Eigen::Vector3d& p) const;
  // Linear part of velo_to_rect, for transforming directions and plane normals.
  Eigen::Matrix3d velo_to_rect_linear() const;
  Eigen::Vector3d velo_to_rect_offset() const;
};

struct GroundTruthObject {
  std::string class_name;
  double truncation = 0;
  int occlusion = 0;
  double alpha = 0;
  double left = 0, top = 0, right = 0, bottom = 0;  // 2D box, pixels
  double h = 0, w = 0, l = 0;                       // metres
  double x = 0, y = 0, z = 0;                       // bottom centre, rectified camera frame
  double rotation_y = 0;
  std::optional<double> score;  // present on detection files only

  double bbox_height() const { return bottom - top; }
};

// a*x + b*y + c*z + d = 0 in the rectified camera frame.
struct GroundPlane {
  double a = 0, b = -1, c = 0, d = 1.65;
};

// Returns angle wrapped to (-pi, pi].
double normalize_angle(double theta);

// Oriented box in the LIDAR frame: centre, length along heading, width across,
// height vertical, yaw about +z.
struct Box3D {
  double x = 0, y = 0, z = 0;
  double l = 1, w = 1, h = 1;
  double yaw = 0;

  Box3D() = default;
  // Validates positive finite dimensions and wraps yaw. Throws ValueError.
  Box3D(double x, double y, double z, double l, double w, double h, double yaw);
};

// Axis-aligned rectangle. In BEV cell space u runs along x (grid rows) and v
// along y (grid columns); in image space u is the pixel column and v the row.
struct Rect2D {
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const { return width() * height(); }
};

struct BevGridSpec {
  double x_min = 0, x_max = 70.4;
  double y_min = -40, y_max = 40;
  double z_min = -2.5, z_max = 0.5;
  double resolution = 0.1;
  int n_slices = 5;

  int rows() const;  // cells along x
  int cols() const;  // cells along y
  double slice_height() const { return (z_max - z_min) / n_slices; }
  // Throws ValueError when the extents are not whole multiples of the resolution.
  void validate() const;

  // 704 x 800 cells at 0.1 m.
  static BevGridSpec full_scale();
  // Half-extent grid (x in [0, 35.2), y in about [-20, 20)) at 0.05 * divisor
  // metres per cell. y is widened until the column count is a multiple of 8:
  // divisor 4 gives 176 x 200, divisor 8 gives 88 x 104.
  static BevGridSpec desk(int divisor);
};

struct ImageSize {
  int width = 1242;
  int height = 375;
};

struct Detection {
  Box3D box;
  double score = 0;
  std::string class_name = "Car";
};

}  // namespace mmfusion
