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
#include <array>
#include <optional>
#include <vector>

#include "mmfusion/types.hpp"

namespace mmfusion::geometry {

struct ImagePoint {
  double u = 0, v = 0;
  double depth = 0;
  bool behind_camera = false;
};

// p_img = P2 * R0_rect * Tr_velo_to_cam * [p; 1], divided by its third component.
ImagePoint project_to_image(const Eigen::Vector3d& velo, const Calibration& calib);
std::vector<ImagePoint> lidar_to_image(const PointCloud& cloud, const Calibration& calib);

// Bottom face counter-clockwise (seen from above) starting at (+l/2, +w/2),
// then the top face in the same order.
std::array<Eigen::Vector3d, 8> box_to_corners(const Box3D& b);

// The four bottom-face corners projected to the ground, same order.
std::array<Eigen::Vector2d, 4> box_footprint(const Box3D& b);

// Axis-aligned bound of the footprint in metres (u = x, v = y).
Rect2D footprint_bounds(const Box3D& b);

// Footprint bound in BEV cell units, clamped to the grid. nullopt when the
// footprint does not overlap the grid.
std::optional<Rect2D> box_to_bev_rect(const Box3D& b, const BevGridSpec& grid);

// Bound of the projected box, clipped to the image. Box edges crossing the
// camera plane are cut at a small positive depth. nullopt when nothing of the
// box lies in front of the camera or inside the image.
std::optional<Rect2D> box_to_image_roi(const Box3D& b, const Calibration& calib, ImageSize image);

// KITTI label pose in the rectified camera frame: bottom-centre location and
// rotation about the camera y axis.
struct CameraPose {
  double x = 0, y = 0, z = 0;
  double rotation_y = 0;
};

CameraPose camera_pose_from_box(const Box3D& b, const Calibration& calib);

// LIDAR-frame box of a labelled object.
Box3D box_from_label(const GroundTruthObject& obj, const Calibration& calib);

// Box of a labelled object in a LIDAR-like frame obtained by permuting the
// camera axes (x' = z, y' = -x, z' = -y). It is a rigid motion of the camera
// frame, so overlaps computed on it equal overlaps in the LIDAR frame; the
// evaluator uses it to work without calibration.
Box3D box_from_label_axes(const GroundTruthObject& obj);

}  // namespace mmfusion::geometry
