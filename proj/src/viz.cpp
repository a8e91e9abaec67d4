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

#include "mmfusion/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "mmfusion/geometry.hpp"

namespace mmfusion::viz {
namespace {

void draw_footprint(image::RgbImage& img, const BevGridSpec& grid, const Box3D& box,
                    const Colour& colour) {
  const auto fp = geometry::box_footprint(box);
  for (int k = 0; k < 4; ++k) {
    const auto a = bev_pixel(grid, fp[k].x(), fp[k].y());
    const auto b = bev_pixel(grid, fp[(k + 1) % 4].x(), fp[(k + 1) % 4].y());
    draw_line(img, a[0], a[1], b[0], b[1], colour);
  }
}

}  // namespace

std::array<int, 2> bev_pixel(const BevGridSpec& grid, double x, double y) {
  const int row = static_cast<int>(std::floor((x - grid.x_min) / grid.resolution));
  const int col = static_cast<int>(std::floor((y - grid.y_min) / grid.resolution));
  return {grid.cols() - 1 - col, grid.rows() - 1 - row};
}

int draw_line(image::RgbImage& img, int x0, int y0, int x1, int y1, const Colour& colour) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  int painted = 0;
  while (true) {
    if (x0 >= 0 && x0 < img.width && y0 >= 0 && y0 < img.height) {
      std::copy(colour.begin(), colour.end(), img.at(x0, y0));
      ++painted;
    }
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return painted;
}

image::RgbImage render_bev(const bev::BevMaps& maps, std::span<const Box3D> ground_truth,
                           std::span<const Box3D> detections) {
  const int rows = maps.grid.rows(), cols = maps.grid.cols();
  image::RgbImage img(cols, rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto v = static_cast<std::uint8_t>(std::lround(255.0 * maps.density(r, c)));
      std::uint8_t* px = img.at(cols - 1 - c, rows - 1 - r);
      px[0] = px[1] = px[2] = v;
    }
  }
  for (const Box3D& b : ground_truth) draw_footprint(img, maps.grid, b, kGroundTruthColour);
  for (const Box3D& b : detections) draw_footprint(img, maps.grid, b, kDetectionColour);
  return img;
}

}  // namespace mmfusion::viz
