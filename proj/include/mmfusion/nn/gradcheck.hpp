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

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "mmfusion/nn/layers.hpp"

namespace mmfusion::nn {

struct GradCheckOptions {
  double step = 1e-4;
  // Entries sampled per parameter buffer; buffers smaller than this are checked exhaustively.
  int samples_per_parameter = 8;
  std::uint64_t seed = 17;
  // Floor of the error denominator. Central differences cannot resolve
  // gradients much below eps * |loss| / step, so entries under this magnitude
  // are compared in absolute terms.
  double min_magnitude = 1e-8;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  int checked = 0;
};

// Compares central finite differences of `loss` against the gradients that
// `loss_and_backward` accumulates into each Parameter::grad. The error of one
// entry is |g_fd - g_bp| / max(min_magnitude, |g_fd| + |g_bp|).
GradCheckReport check_gradients(std::span<Parameter* const> params,
                                const std::function<double()>& loss,
                                const std::function<void()>& loss_and_backward,
                                const GradCheckOptions& options = {});

}  // namespace mmfusion::nn
