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
#include <string>
#include <vector>

#include "mmfusion/nn/tensor.hpp"
#include "mmfusion/types.hpp"

namespace mmfusion::bev {

// Rasterized bird's-eye view: n_slices max-height channels followed by one
// density channel, stored as a (1, rows, cols, n_slices + 1) tensor.
struct BevMaps {
  BevGridSpec grid;
  nn::Tensor4 channels;

  int density_channel() const { return grid.n_slices; }
  double density(int row, int col) const { return channels.at(0, row, col, grid.n_slices); }
};

// min(1, log(n + 1) / log(64))
double cell_density(std::size_t n_points);

// Height channel s holds, per cell, the largest (z - z_s) / dz among points of
// slice s (0 when the slice is empty); the density channel counts every in-range
// point of the cell. Points outside the x/y/z ranges are discarded.
BevMaps encode_bev(const PointCloud& cloud, const BevGridSpec& grid);

// Dump format: text header "H W C\n" then H*W*C little-endian float32 values,
// row-major, channels last.
std::vector<std::byte> serialize_bev(const BevMaps& maps);

}  // namespace mmfusion::bev
