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

#include "mmfusion/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mmfusion::geometry {
namespace {

constexpr double kNearDepth = 1e-3;

constexpr std::array<std::array<int, 2>, 12> kBoxEdges{{{0, 1}, {1, 2}, {2, 3}, {3, 0},
                                                        {4, 5}, {5, 6}, {6, 7}, {7, 4},
                                                        {0, 4}, {1, 5}, {2, 6}, {3, 7}}};

Eigen::Vector3d homogeneous_image(const Eigen::Vector3d& velo, const Calibration& calib) {
  const Eigen::Vector3d rect = calib.velo_to_rect(velo);
  return calib.p2 * rect.homogeneous();
}

}  // namespace

ImagePoint project_to_image(const Eigen::Vector3d& velo, const Calibration& calib) {
  const Eigen::Vector3d hom = homogeneous_image(velo, calib);
  ImagePoint p;
  p.depth = hom.z();
  p.behind_camera = !(p.depth > 0.0);
  if (p.depth != 0.0) {
    p.u = hom.x() / p.depth;
    p.v = hom.y() / p.depth;
  }
  return p;
}

std::vector<ImagePoint> lidar_to_image(const PointCloud& cloud, const Calibration& calib) {
  std::vector<ImagePoint> out;
  out.reserve(cloud.size());
  for (const LidarPoint& p : cloud.points) {
    out.push_back(project_to_image({p.x, p.y, p.z}, calib));
  }
  return out;
}

std::array<Eigen::Vector3d, 8> box_to_corners(const Box3D& b) {
  static constexpr double kSigns[4][2] = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  std::array<Eigen::Vector3d, 8> corners;
  for (int face = 0; face < 2; ++face) {
    const double dz = (face == 0 ? -0.5 : 0.5) * b.h;
    for (int k = 0; k < 4; ++k) {
      const double dx = kSigns[k][0] * 0.5 * b.l;
      const double dy = kSigns[k][1] * 0.5 * b.w;
      corners[face * 4 + k] = {b.x + c * dx - s * dy, b.y + s * dx + c * dy, b.z + dz};
    }
  }
  return corners;
}

std::array<Eigen::Vector2d, 4> box_footprint(const Box3D& b) {
  const auto corners = box_to_corners(b);
  std::array<Eigen::Vector2d, 4> fp;
  for (int k = 0; k < 4; ++k) fp[k] = corners[k].head<2>();
  return fp;
}

Rect2D footprint_bounds(const Box3D& b) {
  Rect2D r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Eigen::Vector2d& p : box_footprint(b)) {
    r.u_min = std::min(r.u_min, p.x());
    r.u_max = std::max(r.u_max, p.x());
    r.v_min = std::min(r.v_min, p.y());
    r.v_max = std::max(r.v_max, p.y());
  }
  return r;
}

std::optional<Rect2D> box_to_bev_rect(const Box3D& b, const BevGridSpec& grid) {
  const Rect2D m = footprint_bounds(b);
  const double rows = grid.rows(), cols = grid.cols();
  Rect2D r{(m.u_min - grid.x_min) / grid.resolution, (m.v_min - grid.y_min) / grid.resolution,
           (m.u_max - grid.x_min) / grid.resolution, (m.v_max - grid.y_min) / grid.resolution};
  r.u_min = std::clamp(r.u_min, 0.0, rows);
  r.u_max = std::clamp(r.u_max, 0.0, rows);
  r.v_min = std::clamp(r.v_min, 0.0, cols);
  r.v_max = std::clamp(r.v_max, 0.0, cols);
  if (!(r.u_max > r.u_min) || !(r.v_max > r.v_min)) return std::nullopt;
  return r;
}

std::optional<Rect2D> box_to_image_roi(const Box3D& b, const Calibration& calib, ImageSize image) {
  const auto corners = box_to_corners(b);
  std::array<Eigen::Vector3d, 8> hom;
  for (int k = 0; k < 8; ++k) hom[k] = homogeneous_image(corners[k], calib);

  double u0 = std::numeric_limits<double>::infinity(), v0 = u0;
  double u1 = -u0, v1 = -u0;
  bool any = false;
  auto take = [&](const Eigen::Vector3d& h) {
    const double u = h.x() / h.z(), v = h.y() / h.z();
    u0 = std::min(u0, u);
    u1 = std::max(u1, u);
    v0 = std::min(v0, v);
    v1 = std::max(v1, v);
    any = true;
  };
  for (const Eigen::Vector3d& h : hom) {
    if (h.z() > kNearDepth) take(h);
  }
  if (!any) return std::nullopt;
  // Homogeneous image coordinates are affine in the 3D point, so edges that
  // cross the near plane can be cut by interpolating them directly.
  for (const auto& e : kBoxEdges) {
    const Eigen::Vector3d& a = hom[e[0]];
    const Eigen::Vector3d& c = hom[e[1]];
    if ((a.z() > kNearDepth) != (c.z() > kNearDepth)) {
      const double t = (kNearDepth - a.z()) / (c.z() - a.z());
      take(a + t * (c - a));
    }
  }
  Rect2D r{std::clamp(u0, 0.0, static_cast<double>(image.width)),
           std::clamp(v0, 0.0, static_cast<double>(image.height)),
           std::clamp(u1, 0.0, static_cast<double>(image.width)),
           std::clamp(v1, 0.0, static_cast<double>(image.height))};
  if (!(r.u_max > r.u_min) || !(r.v_max > r.v_min)) return std::nullopt;
  return r;
}

CameraPose camera_pose_from_box(const Box3D& b, const Calibration& calib) {
  const Eigen::Vector3d centre = calib.velo_to_rect({b.x, b.y, b.z});
  const Eigen::Vector3d heading =
      calib.velo_to_rect_linear() * Eigen::Vector3d(std::cos(b.yaw), std::sin(b.yaw), 0.0);
  CameraPose pose;
  pose.x = centre.x();
  pose.y = centre.y() + 0.5 * b.h;
  pose.z = centre.z();
  pose.rotation_y = normalize_angle(std::atan2(-heading.z(), heading.x()));
  return pose;
}

Box3D box_from_label(const GroundTruthObject& obj, const Calibration& calib) {
  const Eigen::Vector3d centre = calib.rect_to_velo({obj.x, obj.y - 0.5 * obj.h, obj.z});
  const Eigen::Vector3d heading = calib.velo_to_rect_linear().lu().solve(
      Eigen::Vector3d(std::cos(obj.rotation_y), 0.0, -std::sin(obj.rotation_y)));
  return Box3D(centre.x(), centre.y(), centre.z(), obj.l, obj.w, obj.h,
               std::atan2(heading.y(), heading.x()));
}

Box3D box_from_label_axes(const GroundTruthObject& obj) {
  return Box3D(obj.z, -obj.x, -(obj.y - 0.5 * obj.h), obj.l, obj.w, obj.h,
               -obj.rotation_y - 0.5 * std::numbers::pi);
}

}  // namespace mmfusion::geometry
