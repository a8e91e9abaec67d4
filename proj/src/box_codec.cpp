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

#include "mmfusion/box_codec.hpp"

#include <cmath>

#include "mmfusion/error.hpp"

namespace mmfusion::codec {

RegressionTarget RegressionTarget::from_values(std::span<const double> v, Mode mode) {
  if (v.size() < static_cast<std::size_t>(size(mode))) {
    throw ShapeError("regression target needs " + std::to_string(size(mode)) + " values");
  }
  RegressionTarget t{v[0], v[1], v[2], v[3], v[4], v[5], 0.0};
  if (mode == Mode::kDetectionHead) t.dtheta = v[6];
  return t;
}

double anchor_diagonal(const Box3D& anchor) { return std::hypot(anchor.l, anchor.w); }

RegressionTarget encode(const Box3D& anchor, const Box3D& gt, Mode mode) {
  const double d = anchor_diagonal(anchor);
  RegressionTarget t;
  t.dx = (gt.x - anchor.x) / d;
  t.dy = (gt.y - anchor.y) / d;
  t.dz = (gt.z - anchor.z) / anchor.h;
  t.dl = std::log(gt.l / anchor.l);
  t.dw = std::log(gt.w / anchor.w);
  t.dh = std::log(gt.h / anchor.h);
  if (mode == Mode::kDetectionHead) t.dtheta = normalize_angle(gt.yaw - anchor.yaw);
  return t;
}

Box3D decode(const Box3D& anchor, const RegressionTarget& t, Mode mode) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw ValueError("decode: non-finite regression target");
  }
  const double d = anchor_diagonal(anchor);
  const double yaw = mode == Mode::kDetectionHead ? anchor.yaw + t.dtheta : anchor.yaw;
  return Box3D(anchor.x + t.dx * d, anchor.y + t.dy * d, anchor.z + t.dz * anchor.h,
               anchor.l * std::exp(t.dl), anchor.w * std::exp(t.dw), anchor.h * std::exp(t.dh), yaw);
}

}  // namespace mmfusion::codec
