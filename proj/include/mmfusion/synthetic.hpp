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
#include <string>
#include <vector>

#include "mmfusion/dataset.hpp"

namespace mmfusion::synth {

// Procedural street scenes: cars as point-sampled boxes on a flat ground plane,
// a few pole-like clutter clusters, and a flat-shaded camera rendering.
struct SceneOptions {
  int min_cars = 2;
  int max_cars = 4;
  double x_min = 6.0, x_max = 30.0;  // car centre range ahead of the sensor, metres
  double max_abs_y = 12.0;
  double yaw_jitter = 0.15;          // radians around 0 or pi/2
  double point_spacing = 0.12;       // mean spacing of surface samples, metres
  int clutter_clusters = 3;
  ImageSize image{1242, 375};
};

// KITTI-like camera with the sensor 1.73 m above a flat ground plane.
Calibration synthetic_calibration();
GroundPlane synthetic_ground_plane();
inline constexpr double kSensorHeight = 1.73;

data::Frame make_frame(std::uint64_t seed, const SceneOptions& options, const std::string& id);

// Frames "000000", "000001", ... seeded from `seed`.
std::vector<data::Frame> make_frames(int count, std::uint64_t seed, const SceneOptions& options = {});

}  // namespace mmfusion::synth
