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
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mmfusion/types.hpp"

namespace mmfusion::overlap {

using BoxIou = std::function<double(const Box3D&, const Box3D&)>;

double iou_axis_aligned(const Rect2D& a, const Rect2D& b);

// Axis-aligned IoU of the two footprints' bounding rectangles.
double iou_bev_bounds(const Box3D& a, const Box3D& b);

// Area of the intersection of two convex polygons given counter-clockwise.
double convex_intersection_area(std::span<const Eigen::Vector2d> a,
                                std::span<const Eigen::Vector2d> b);
double polygon_area(std::span<const Eigen::Vector2d> poly);

// IoU of the oriented footprints (Sutherland-Hodgman clipping + shoelace area).
double iou_rotated_bev(const Box3D& a, const Box3D& b);

// Volumetric IoU: footprint intersection times vertical overlap.
double iou_3d(const Box3D& a, const Box3D& b);

enum class Label { kNegative, kIgnored, kPositive };

struct Assignment {
  Label label = Label::kNegative;
  std::optional<std::size_t> matched_gt;  // argmax ground truth, when any overlaps
  double max_iou = 0.0;
};

// positive iff max_iou >= pos_threshold, negative iff max_iou < neg_threshold,
// ignored otherwise. Requires 0 <= neg_threshold <= pos_threshold <= 1.
std::vector<Assignment> assign_targets(std::span<const Box3D> anchors, std::span<const Box3D> gts,
                                       double pos_threshold, double neg_threshold,
                                       const BoxIou& iou);

// Greedy suppression. Boxes are visited by descending score (ties by lower
// index); a box is dropped when its IoU with an already kept box is strictly
// greater than `threshold`. Returns kept indices in visiting order, stopping
// once `max_keep` boxes are kept.
std::vector<std::size_t> nms(std::span<const Box3D> boxes, std::span<const double> scores,
                             double threshold, const BoxIou& iou,
                             std::size_t max_keep = std::numeric_limits<std::size_t>::max());

// Same result as nms with iou_bev_bounds, with the footprint bounds computed once.
std::vector<std::size_t> nms_bev_bounds(std::span<const Box3D> boxes,
                                        std::span<const double> scores, double threshold,
                                        std::size_t max_keep = std::numeric_limits<std::size_t>::max());

}  // namespace mmfusion::overlap
