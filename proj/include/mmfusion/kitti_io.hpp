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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmfusion/types.hpp"

namespace mmfusion::kitti {

// Velodyne scans: packed little-endian float32 quadruples (x, y, z, reflectance).
PointCloud parse_point_cloud(std::span<const std::byte> raw);
std::vector<std::byte> serialize_point_cloud(const PointCloud& cloud);

// `KEY: v1 v2 ...` lines; P2, R0_rect and Tr_velo_to_cam are required.
Calibration parse_calibration(std::string_view text);
std::string write_calibration(const Calibration& calib);

// 15-field KITTI label lines. A 16th score column is accepted and kept in
// GroundTruthObject::score. Errors carry the 1-based line number.
std::vector<GroundTruthObject> parse_labels(std::string_view text);
std::string write_labels(std::span<const GroundTruthObject> objects);

// Label record of a LIDAR-frame detection (truncation and occlusion -1).
GroundTruthObject detection_to_object(const Detection& detection, const Calibration& calib,
                                      ImageSize image = {});

// Serializes LIDAR-frame detections as KITTI result lines (15 fields + score).
// The 2D box is the projection of the 3D box clipped to `image`, or all zeros
// when the box is not visible.
std::string write_detections(std::span<const Detection> detections, const Calibration& calib,
                             ImageSize image = {});

// Reads the last line of an AVOD-style planes file and normalizes it.
GroundPlane parse_ground_plane(std::string_view text);
std::string write_ground_plane(const GroundPlane& plane);

// Unit normal with b < 0 (normal points up in the camera frame).
GroundPlane normalize_plane(const GroundPlane& plane);

inline constexpr GroundPlane kDefaultGroundPlane{0.0, -1.0, 0.0, 1.65};

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::byte> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
void write_binary_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace mmfusion::kitti
