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

#include "mmfusion/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "mmfusion/error.hpp"

namespace mmfusion::nn {

double bce(double p, int label) {
  const double q = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
  return label ? -std::log(q) : -std::log(1.0 - q);
}

LossWithGrad loss_bce(std::span<const double> p, std::span<const int> labels) {
  if (p.size() != labels.size()) throw ShapeError("loss_bce: length mismatch");
  LossWithGrad out;
  out.grad.assign(p.size(), 0.0);
  if (p.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.value += bce(p[i], labels[i]);
    // The clamp is flat outside [eps, 1 - eps].
    if (p[i] > kBceEpsilon && p[i] < 1.0 - kBceEpsilon) {
      out.grad[i] = (labels[i] ? -1.0 / p[i] : 1.0 / (1.0 - p[i])) * inv_n;
    }
  }
  out.value *= inv_n;
  return out;
}

double smooth_l1(double e) {
  const double a = std::abs(e);
  return a < 1.0 ? 0.5 * e * e : a - 0.5;
}

LossWithGrad loss_smooth_l1(std::span<const double> pred, std::span<const double> target,
                            int samples) {
  if (pred.size() != target.size()) throw ShapeError("loss_smooth_l1: length mismatch");
  LossWithGrad out;
  out.grad.assign(pred.size(), 0.0);
  if (samples <= 0) return out;
  const double inv = 1.0 / samples;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    out.value += smooth_l1(e);
    out.grad[i] = (std::abs(e) < 1.0 ? e : (e > 0 ? 1.0 : -1.0)) * inv;
  }
  out.value *= inv;
  return out;
}

}  // namespace mmfusion::nn
