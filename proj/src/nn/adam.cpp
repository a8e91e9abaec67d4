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

#include "mmfusion/nn/adam.hpp"

#include <cmath>

#include "mmfusion/error.hpp"

namespace mmfusion::nn {

void adam_step(AdamState& state, std::span<Parameter* const> params) {
  if (!(state.lr > 0.0)) throw ValueError("adam: learning rate must be positive");
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->size(), 0.0);
      state.second_moment.emplace_back(p->size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam: parameter count changed between steps");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].size() != params[k]->size() ||
        params[k]->grad.size() != params[k]->size()) {
      throw ShapeError("adam: moment shape mismatch for " + params[k]->name);
    }
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    std::vector<double>& m = state.first_moment[k];
    std::vector<double>& v = state.second_moment[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p.value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace mmfusion::nn
