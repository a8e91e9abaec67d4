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

#include "mmfusion/detector/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "mmfusion/error.hpp"
#include "mmfusion/nn/checkpoint.hpp"

namespace mmfusion::detector {

double learning_rate_at(const DetectorConfig& cfg, long iteration) {
  if (iteration < 0) throw ValueError("negative iteration");
  return cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(iteration / cfg.decay_every));
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, long iteration) {
  char name[32];
  std::snprintf(name, sizeof(name), "iter_%07ld.ckpt", iteration);
  return dir / name;
}

nn::AdamState train(Detector& detector, std::size_t frame_count, const FrameProvider& frames,
                    const TrainOptions& options) {
  const DetectorConfig& cfg = detector.config();
  if (frame_count == 0) throw ValueError("training needs at least one frame");
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  std::vector<nn::Parameter*> params = detector.parameters();
  std::vector<const nn::Parameter*> const_params(params.begin(), params.end());
  nn::AdamState adam;
  nn::Rng order_rng(cfg.seed ^ 0x5bd1e995ULL);
  nn::Rng sample_rng(cfg.seed ^ 0x27d4eb2fULL);
  std::vector<std::size_t> order(frame_count);
  std::size_t cursor = frame_count;

  for (long it = 0; it < cfg.iterations; ++it) {
    if (cursor == frame_count) {
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
      cursor = 0;
    }
    const std::size_t index = order[cursor++];
    PreparedFrame frame;
    try {
      frame = frames(index);
    } catch (const Error& e) {
      throw IoError("training frame " + std::to_string(index) + ": " + e.what());
    }

    detector.zero_grad();
    StepOptions step;
    step.sample_seed = sample_rng.next_u64();
    const StepResult r = detector.train_step(frame, step);
    adam.lr = learning_rate_at(cfg, it);
    nn::adam_step(adam, params);

    if (options.on_step) {
      options.on_step({it, frame.id, r.loss, adam.lr, r.rpn_positives, r.dh_positives});
    }
    if (!options.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        (it + 1) % cfg.checkpoint_every == 0) {
      nn::save_checkpoint(checkpoint_path(options.checkpoint_dir, it + 1), const_params);
    }
  }
  if (!options.checkpoint_dir.empty()) {
    nn::save_checkpoint(options.checkpoint_dir / "final.ckpt", const_params);
  }
  return adam;
}

}  // namespace mmfusion::detector
