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
#include <span>

#include "mmfusion/types.hpp"

namespace mmfusion::codec {

// RPN targets carry no orientation term; detection-head targets add dtheta.
enum class Mode { kRpn, kDetectionHead };

struct RegressionTarget {
  double dx = 0, dy = 0, dz = 0;
  double dl = 0, dw = 0, dh = 0;
  double dtheta = 0;  // meaningful in kDetectionHead mode only

  // 6 values in RPN mode, 7 in detection-head mode.
  static int size(Mode mode) { return mode == Mode::kRpn ? 6 : 7; }
  std::array<double, 7> values() const { return {dx, dy, dz, dl, dw, dh, dtheta}; }
  static RegressionTarget from_values(std::span<const double> v, Mode mode);
};

// sqrt(l^2 + w^2) of the anchor footprint.
double anchor_diagonal(const Box3D& anchor);

RegressionTarget encode(const Box3D& anchor, const Box3D& gt, Mode mode);

// Exact inverse of encode. In RPN mode the decoded box keeps the anchor's yaw.
Box3D decode(const Box3D& anchor, const RegressionTarget& t, Mode mode);

}  // namespace mmfusion::codec
