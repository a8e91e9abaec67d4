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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmfusion/bev_encoder.hpp"
#include "mmfusion/types.hpp"

namespace mmfusion::anchors {

struct DimPair {
  double l = 0, w = 0;
};

struct AnchorSet {
  std::vector<Box3D> anchors;
  double stride = 0.5;
  std::vector<DimPair> source_dims;

  std::size_t size() const { return anchors.size(); }
};

// k-means over (l, w) with k-means++ seeding from `seed`; stops after 100
// iterations or when no centroid moves more than 1e-6. Centroids are returned
// sorted by length. Throws DegenerateError with fewer than k distinct samples.
std::vector<DimPair> cluster_dimensions(std::span<const GroundTruthObject> objects, int k,
                                        std::uint64_t seed = 2024);

// Height of the ground plane below LIDAR point (x, y). Throws DegenerateError
// when the plane is vertical in the LIDAR frame.
double ground_height(const GroundPlane& plane, const Calibration& calib, double x, double y);

// Lattice over [x_min, x_max] x [y_min, y_max] at `stride` (the far end is
// included when it falls on the lattice); every lattice point gets each
// cluster size at yaw 0 and pi/2, resting on the ground plane. Ordering is
// x-major, then y, then size, then rotation.
AnchorSet generate_anchors(const BevGridSpec& grid, std::span<const DimPair> dims,
                           const GroundPlane& plane, const Calibration& calib, double height,
                           double stride);

// Indices of anchors whose BEV rectangle covers at least one cell with a
// non-zero density channel.
std::vector<std::size_t> occupied_anchor_indices(const AnchorSet& set, const bev::BevMaps& bev);
AnchorSet filter_empty_anchors(const AnchorSet& set, const bev::BevMaps& bev);

// Cached cluster file: one "class k l w" line per centroid.
std::string write_dims_file(std::string_view class_name, std::span<const DimPair> dims);
std::vector<DimPair> parse_dims_file(std::string_view text, std::string_view class_name);

}  // namespace mmfusion::anchors
