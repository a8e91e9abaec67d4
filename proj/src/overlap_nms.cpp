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

#include "mmfusion/overlap_nms.hpp"

#include <algorithm>
#include <numeric>

#include "mmfusion/error.hpp"
#include "mmfusion/geometry.hpp"

namespace mmfusion::overlap {
namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double vertical_overlap(const Box3D& a, const Box3D& b) {
  const double lo = std::max(a.z - 0.5 * a.h, b.z - 0.5 * b.h);
  const double hi = std::min(a.z + 0.5 * a.h, b.z + 0.5 * b.h);
  return std::max(0.0, hi - lo);
}

}  // namespace

double iou_axis_aligned(const Rect2D& a, const Rect2D& b) {
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double iou_bev_bounds(const Box3D& a, const Box3D& b) {
  return iou_axis_aligned(geometry::footprint_bounds(a), geometry::footprint_bounds(b));
}

double polygon_area(std::span<const Eigen::Vector2d> poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * std::abs(twice);
}

double convex_intersection_area(std::span<const Eigen::Vector2d> a,
                                std::span<const Eigen::Vector2d> b) {
  std::vector<Eigen::Vector2d> out(a.begin(), a.end());
  for (std::size_t e = 0; e < b.size() && !out.empty(); ++e) {
    const Eigen::Vector2d& p = b[e];
    const Eigen::Vector2d edge = b[(e + 1) % b.size()] - p;
    std::vector<Eigen::Vector2d> in;
    in.swap(out);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Eigen::Vector2d& cur = in[i];
      const Eigen::Vector2d& prev = in[(i + in.size() - 1) % in.size()];
      const double sc = cross(edge, cur - p);
      const double sp = cross(edge, prev - p);
      if (sc >= 0.0) {
        if (sp < 0.0) out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
        out.push_back(cur);
      } else if (sp >= 0.0) {
        out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
      }
    }
  }
  return out.size() < 3 ? 0.0 : polygon_area(out);
}

double iou_rotated_bev(const Box3D& a, const Box3D& b) {
  const auto fa = geometry::box_footprint(a);
  const auto fb = geometry::box_footprint(b);
  const double inter = convex_intersection_area(fa, fb);
  const double uni = a.l * a.w + b.l * b.w - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double dz = vertical_overlap(a, b);
  if (dz <= 0.0) return 0.0;
  const double inter =
      convex_intersection_area(geometry::box_footprint(a), geometry::box_footprint(b)) * dz;
  const double uni = a.l * a.w * a.h + b.l * b.w * b.h - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

std::vector<Assignment> assign_targets(std::span<const Box3D> anchors, std::span<const Box3D> gts,
                                       double pos_threshold, double neg_threshold,
                                       const BoxIou& iou) {
  if (!(0.0 <= neg_threshold && neg_threshold <= pos_threshold && pos_threshold <= 1.0)) {
    throw ValueError("assign_targets: thresholds must satisfy 0 <= neg <= pos <= 1");
  }
  std::vector<Assignment> out(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    Assignment& a = out[i];
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(anchors[i], gts[g]);
      if (v > a.max_iou) {
        a.max_iou = v;
        a.matched_gt = g;
      }
    }
    if (a.max_iou >= pos_threshold) {
      a.label = Label::kPositive;
    } else if (a.max_iou < neg_threshold) {
      a.label = Label::kNegative;
    } else {
      a.label = Label::kIgnored;
    }
  }
  return out;
}

namespace {

template <typename Overlap>
std::vector<std::size_t> greedy_nms(std::size_t n, std::span<const double> scores, double threshold,
                                    std::size_t max_keep, const Overlap& overlap) {
  if (n != scores.size()) throw ShapeError("nms: boxes and scores differ in length");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<char> dropped(n, 0);
  std::vector<std::size_t> keep;
  for (std::size_t oi = 0; oi < order.size() && keep.size() < max_keep; ++oi) {
    const std::size_t i = order[oi];
    if (dropped[i]) continue;
    keep.push_back(i);
    if (keep.size() == max_keep) break;
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!dropped[j] && overlap(i, j) > threshold) dropped[j] = 1;
    }
  }
  return keep;
}

}  // namespace

std::vector<std::size_t> nms(std::span<const Box3D> boxes, std::span<const double> scores,
                             double threshold, const BoxIou& iou, std::size_t max_keep) {
  return greedy_nms(boxes.size(), scores, threshold, max_keep,
                    [&](std::size_t i, std::size_t j) { return iou(boxes[i], boxes[j]); });
}

std::vector<std::size_t> nms_bev_bounds(std::span<const Box3D> boxes,
                                        std::span<const double> scores, double threshold,
                                        std::size_t max_keep) {
  std::vector<Rect2D> rects;
  rects.reserve(boxes.size());
  for (const Box3D& b : boxes) rects.push_back(geometry::footprint_bounds(b));
  return greedy_nms(boxes.size(), scores, threshold, max_keep, [&](std::size_t i, std::size_t j) {
    return iou_axis_aligned(rects[i], rects[j]);
  });
}

}  // namespace mmfusion::overlap
