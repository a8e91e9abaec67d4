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

#include "mmfusion/bev_encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

namespace mmfusion::bev {

double cell_density(std::size_t n_points) {
  return std::min(1.0, std::log(static_cast<double>(n_points) + 1.0) / std::log(64.0));
}

BevMaps encode_bev(const PointCloud& cloud, const BevGridSpec& grid) {
  grid.validate();
  const int rows = grid.rows(), cols = grid.cols(), slices = grid.n_slices;
  BevMaps maps{grid, nn::Tensor4({1, rows, cols, slices + 1})};
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(rows) * cols, 0);
  const double dz = grid.slice_height();

  for (const LidarPoint& p : cloud.points) {
    const double x = p.x, y = p.y, z = p.z;
    if (x < grid.x_min || x >= grid.x_max || y < grid.y_min || y >= grid.y_max ||
        z < grid.z_min || z >= grid.z_max) {
      continue;
    }
    const int i = std::min(static_cast<int>(std::floor((x - grid.x_min) / grid.resolution)), rows - 1);
    const int j = std::min(static_cast<int>(std::floor((y - grid.y_min) / grid.resolution)), cols - 1);
    const int s = std::min(static_cast<int>(std::floor((z - grid.z_min) / dz)), slices - 1);
    const double floor_z = grid.z_min + s * dz;
    const double height = std::clamp((z - floor_z) / dz, 0.0, 1.0);
    double& cell = maps.channels.at(0, i, j, s);
    cell = std::max(cell, height);
    ++counts[static_cast<std::size_t>(i) * cols + j];
  }
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      maps.channels.at(0, i, j, slices) = cell_density(counts[static_cast<std::size_t>(i) * cols + j]);
    }
  }
  return maps;
}

std::vector<std::byte> serialize_bev(const BevMaps& maps) {
  const nn::Shape4& s = maps.channels.shape();
  const std::string header =
      std::to_string(s.h) + " " + std::to_string(s.w) + " " + std::to_string(s.c) + "\n";
  std::vector<std::byte> out;
  out.reserve(header.size() + maps.channels.size() * 4);
  for (char ch : header) out.push_back(static_cast<std::byte>(ch));
  for (double v : maps.channels.values()) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::byte>((bits >> (8 * k)) & 0xFF));
  }
  return out;
}

}  // namespace mmfusion::bev
