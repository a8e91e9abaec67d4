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

#include "mmfusion/types.hpp"

#include <Eigen/LU>
#include <cmath>
#include <numbers>

#include "mmfusion/error.hpp"

namespace mmfusion {

Eigen::Matrix3d Calibration::velo_to_rect_linear() const {
  return r0_rect * tr_velo_to_cam.leftCols<3>();
}

Eigen::Vector3d Calibration::velo_to_rect_offset() const {
  return r0_rect * tr_velo_to_cam.col(3);
}

Eigen::Vector3d Calibration::velo_to_rect(const Eigen::Vector3d& p) const {
  return velo_to_rect_linear() * p + velo_to_rect_offset();
}

Eigen::Vector3d Calibration::rect_to_velo(const Eigen::Vector3d& p) const {
  return velo_to_rect_linear().lu().solve(p - velo_to_rect_offset());
}

double normalize_angle(double theta) {
  double t = std::remainder(theta, 2.0 * std::numbers::pi);
  if (t <= -std::numbers::pi) t += 2.0 * std::numbers::pi;
  return t;
}

Box3D::Box3D(double x_, double y_, double z_, double l_, double w_, double h_, double yaw_)
    : x(x_), y(y_), z(z_), l(l_), w(w_), h(h_), yaw(normalize_angle(yaw_)) {
  if (!(l > 0 && w > 0 && h > 0) || !std::isfinite(l) || !std::isfinite(w) || !std::isfinite(h)) {
    throw ValueError("box dimensions must be positive and finite");
  }
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(yaw)) {
    throw ValueError("box pose must be finite");
  }
}

int BevGridSpec::rows() const {
  return static_cast<int>(std::lround((x_max - x_min) / resolution));
}

int BevGridSpec::cols() const {
  return static_cast<int>(std::lround((y_max - y_min) / resolution));
}

void BevGridSpec::validate() const {
  if (!(resolution > 0)) throw ValueError("grid resolution must be positive");
  if (n_slices < 1) throw ValueError("grid needs at least one height slice");
  if (!(x_max > x_min && y_max > y_min && z_max > z_min)) throw ValueError("empty grid range");
  const double rx = (x_max - x_min) / resolution;
  const double ry = (y_max - y_min) / resolution;
  if (std::abs(rx - std::round(rx)) > 1e-6 || std::abs(ry - std::round(ry)) > 1e-6) {
    throw ValueError("grid extent is not a whole number of cells");
  }
}

BevGridSpec BevGridSpec::full_scale() { return BevGridSpec{}; }

BevGridSpec BevGridSpec::desk(int divisor) {
  if (divisor < 1) throw ValueError("desk grid divisor must be positive");
  BevGridSpec g;
  g.x_min = 0;
  g.x_max = 35.2;
  g.resolution = 0.05 * divisor;
  // Widen y symmetrically so the column count stays a multiple of 8.
  const int cols = (static_cast<int>(std::lround(40.0 / g.resolution)) + 7) / 8 * 8;
  g.y_max = 0.5 * cols * g.resolution;
  g.y_min = -g.y_max;
  g.validate();
  return g;
}

}  // namespace mmfusion
