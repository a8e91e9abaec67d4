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

#include "mmfusion/anchor_gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mmfusion/error.hpp"
#include "mmfusion/geometry.hpp"
#include "mmfusion/nn/tensor.hpp"

namespace mmfusion::anchors {
namespace {

double sq_dist(const DimPair& a, const DimPair& b) {
  return (a.l - b.l) * (a.l - b.l) + (a.w - b.w) * (a.w - b.w);
}

int lattice_count(double lo, double hi, double stride) {
  return static_cast<int>(std::floor((hi - lo) / stride + 1e-9)) + 1;
}

}  // namespace

std::vector<DimPair> cluster_dimensions(std::span<const GroundTruthObject> objects, int k,
                                        std::uint64_t seed) {
  if (k < 1) throw ValueError("cluster_dimensions: k must be at least 1");
  std::vector<DimPair> samples;
  samples.reserve(objects.size());
  for (const GroundTruthObject& o : objects) samples.push_back({o.l, o.w});

  std::vector<DimPair> distinct = samples;
  std::sort(distinct.begin(), distinct.end(),
            [](const DimPair& a, const DimPair& b) { return a.l != b.l ? a.l < b.l : a.w < b.w; });
  distinct.erase(std::unique(distinct.begin(), distinct.end(),
                             [](const DimPair& a, const DimPair& b) {
                               return a.l == b.l && a.w == b.w;
                             }),
                 distinct.end());
  if (distinct.size() < static_cast<std::size_t>(k)) {
    throw DegenerateError("cluster_dimensions: " + std::to_string(distinct.size()) +
                          " distinct samples cannot form " + std::to_string(k) + " clusters");
  }

  nn::Rng rng(seed);
  std::vector<DimPair> centres{samples[rng.below(samples.size())]};
  std::vector<double> d2(samples.size());
  while (centres.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const DimPair& c : centres) best = std::min(best, sq_dist(samples[i], c));
      d2[i] = best;
      total += best;
    }
    // D^2 sampling; points already chosen have zero weight.
    const double target = rng.uniform() * total;
    std::size_t pick = samples.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      acc += d2[i];
      if (d2[i] > 0.0 && target < acc) {
        pick = i;
        break;
      }
    }
    if (pick == samples.size()) {
      pick = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
    }
    centres.push_back(samples[pick]);
  }

  std::vector<int> owner(samples.size(), 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(samples[i], centres[c]);
        if (d < best) {
          best = d;
          owner[i] = c;
        }
      }
    }
    std::vector<DimPair> sum(k);
    std::vector<int> count(k, 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      sum[owner[i]].l += samples[i].l;
      sum[owner[i]].w += samples[i].w;
      ++count[owner[i]];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) continue;  // keeps its previous position
      const DimPair next{sum[c].l / count[c], sum[c].w / count[c]};
      shift = std::max(shift, std::sqrt(sq_dist(next, centres[c])));
      centres[c] = next;
    }
    if (shift < 1e-6) break;
  }
  std::sort(centres.begin(), centres.end(),
            [](const DimPair& a, const DimPair& b) { return a.l < b.l; });
  return centres;
}

double ground_height(const GroundPlane& plane, const Calibration& calib, double x, double y) {
  const Eigen::Vector3d n(plane.a, plane.b, plane.c);
  const Eigen::Vector3d nl = calib.velo_to_rect_linear().transpose() * n;
  const double dl = n.dot(calib.velo_to_rect_offset()) + plane.d;
  if (std::abs(nl.z()) < 1e-6) {
    throw DegenerateError("ground plane is vertical in the LIDAR frame");
  }
  return -(nl.x() * x + nl.y() * y + dl) / nl.z();
}

AnchorSet generate_anchors(const BevGridSpec& grid, std::span<const DimPair> dims,
                           const GroundPlane& plane, const Calibration& calib, double height,
                           double stride) {
  if (!(stride > 0.0)) throw ValueError("anchor stride must be positive");
  if (!(height > 0.0)) throw ValueError("anchor height must be positive");
  if (dims.empty()) throw ValueError("anchor generation needs at least one size");
  AnchorSet set;
  set.stride = stride;
  set.source_dims.assign(dims.begin(), dims.end());
  const int nx = lattice_count(grid.x_min, grid.x_max, stride);
  const int ny = lattice_count(grid.y_min, grid.y_max, stride);
  set.anchors.reserve(static_cast<std::size_t>(nx) * ny * dims.size() * 2);
  for (int ix = 0; ix < nx; ++ix) {
    const double x = grid.x_min + ix * stride;
    for (int iy = 0; iy < ny; ++iy) {
      const double y = grid.y_min + iy * stride;
      const double z = ground_height(plane, calib, x, y) + 0.5 * height;
      for (const DimPair& d : dims) {
        set.anchors.emplace_back(x, y, z, d.l, d.w, height, 0.0);
        set.anchors.emplace_back(x, y, z, d.l, d.w, height, 0.5 * std::numbers::pi);
      }
    }
  }
  return set;
}

std::vector<std::size_t> occupied_anchor_indices(const AnchorSet& set, const bev::BevMaps& bev) {
  const int rows = bev.grid.rows(), cols = bev.grid.cols();
  // Summed-area table of occupied cells.
  std::vector<int> sat(static_cast<std::size_t>(rows + 1) * (cols + 1), 0);
  auto at = [&](int r, int c) -> int& { return sat[static_cast<std::size_t>(r) * (cols + 1) + c]; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      at(r + 1, c + 1) = (bev.density(r, c) > 0.0 ? 1 : 0) + at(r, c + 1) + at(r + 1, c) - at(r, c);
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < set.anchors.size(); ++i) {
    const auto rect = geometry::box_to_bev_rect(set.anchors[i], bev.grid);
    if (!rect) continue;
    const int r0 = std::clamp(static_cast<int>(std::floor(rect->u_min)), 0, rows);
    const int r1 = std::clamp(static_cast<int>(std::ceil(rect->u_max)), 0, rows);
    const int c0 = std::clamp(static_cast<int>(std::floor(rect->v_min)), 0, cols);
    const int c1 = std::clamp(static_cast<int>(std::ceil(rect->v_max)), 0, cols);
    if (r1 <= r0 || c1 <= c0) continue;
    if (at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0) > 0) keep.push_back(i);
  }
  return keep;
}

AnchorSet filter_empty_anchors(const AnchorSet& set, const bev::BevMaps& bev) {
  AnchorSet out;
  out.stride = set.stride;
  out.source_dims = set.source_dims;
  for (std::size_t i : occupied_anchor_indices(set, bev)) out.anchors.push_back(set.anchors[i]);
  return out;
}

std::string write_dims_file(std::string_view class_name, std::span<const DimPair> dims) {
  std::ostringstream os;
  os.precision(9);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    os << class_name << " " << i << " " << dims[i].l << " " << dims[i].w << "\n";
  }
  return os.str();
}

std::vector<DimPair> parse_dims_file(std::string_view text, std::string_view class_name) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<DimPair> dims;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string cls;
    int k = 0;
    DimPair d;
    if (!(ls >> cls)) continue;
    if (!(ls >> k >> d.l >> d.w) || !(d.l > 0 && d.w > 0)) {
      throw FormatError("anchor dims line " + std::to_string(line_no) + " is malformed");
    }
    if (cls == class_name) dims.push_back(d);
  }
  if (dims.empty()) throw FormatError("anchor dims file has no entries for " + std::string(class_name));
  return dims;
}

}  // namespace mmfusion::anchors
