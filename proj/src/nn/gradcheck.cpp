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

#include "mmfusion/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mmfusion::nn {

GradCheckReport check_gradients(std::span<Parameter* const> params,
                                const std::function<double()>& loss,
                                const std::function<void()>& loss_and_backward,
                                const GradCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  loss_and_backward();
  std::vector<Buffer> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);

  Rng rng(options.seed);
  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    std::vector<std::size_t> picks;
    if (p.size() <= static_cast<std::size_t>(options.samples_per_parameter)) {
      picks.resize(p.size());
      std::iota(picks.begin(), picks.end(), 0);
    } else {
      for (int s = 0; s < options.samples_per_parameter; ++s) picks.push_back(rng.below(p.size()));
    }
    for (std::size_t i : picks) {
      const double saved = p.value[i];
      p.value[i] = saved + options.step;
      const double up = loss();
      p.value[i] = saved - options.step;
      const double down = loss();
      p.value[i] = saved;
      const double fd = (up - down) / (2.0 * options.step);
      const double bp = analytic[k][i];
      const double err = std::abs(fd - bp) / std::max(options.min_magnitude, std::abs(fd) + std::abs(bp));
      ++report.checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = p.name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace mmfusion::nn
