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

#include <span>
#include <vector>

namespace mmfusion::nn {

inline constexpr double kBceEpsilon = 1e-7;

struct LossWithGrad {
  double value = 0.0;
  std::vector<double> grad;  // d value / d prediction, same length as the prediction
};

// Binary cross-entropy of one probability against a {0, 1} label; p is clamped
// to [eps, 1 - eps].
double bce(double p, int label);

// Mean BCE over a batch of probabilities.
LossWithGrad loss_bce(std::span<const double> p, std::span<const int> labels);

// 0.5 e^2 for |e| < 1, |e| - 0.5 otherwise.
double smooth_l1(double e);

// Smooth-L1 summed over all elements and divided by `samples` (the number of
// contributing rows in the batch).
LossWithGrad loss_smooth_l1(std::span<const double> pred, std::span<const double> target,
                            int samples = 1);

}  // namespace mmfusion::nn
