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

#include "mmfusion/nn/layers.hpp"

namespace mmfusion::nn {

struct AdamState {
  long step = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Bias-corrected Adam update using each parameter's accumulated gradient.
// Moment buffers are created on the first call and must keep matching shapes.
void adam_step(AdamState& state, std::span<Parameter* const> params);

}  // namespace mmfusion::nn
