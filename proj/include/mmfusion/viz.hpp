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

#include <array>
#include <cstdint>
#include <span>

#include "mmfusion/bev_encoder.hpp"
#include "mmfusion/image.hpp"

namespace mmfusion::viz {

using Colour = std::array<std::uint8_t, 3>;
inline constexpr Colour kDetectionColour{0, 255, 0};
inline constexpr Colour kGroundTruthColour{255, 0, 0};

// Pixel of a LIDAR ground point in the BEV picture: one pixel per cell, forward
// (+x) pointing up and left (+y) pointing left.
std::array<int, 2> bev_pixel(const BevGridSpec& grid, double x, double y);

// Bresenham segment, clipped per pixel to the image. Returns the number of
// pixels painted.
int draw_line(image::RgbImage& img, int x0, int y0, int x1, int y1, const Colour& colour);

// Density channel as grayscale with footprint outlines on top (ground truth
// first, detections over it).
image::RgbImage render_bev(const bev::BevMaps& maps, std::span<const Box3D> ground_truth,
                           std::span<const Box3D> detections);

}  // namespace mmfusion::viz
