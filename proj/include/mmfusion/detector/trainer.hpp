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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>

#include "mmfusion/detector/model.hpp"
#include "mmfusion/nn/adam.hpp"

namespace mmfusion::detector {

// base_lr * decay^floor(iteration / decay_every)
double learning_rate_at(const DetectorConfig& cfg, long iteration);

struct TrainLogEntry {
  long iteration = 0;
  std::string frame_id;
  LossBreakdown loss;
  double learning_rate = 0;
  int rpn_positives = 0;
  int dh_positives = 0;
};

using FrameProvider = std::function<PreparedFrame(std::size_t index)>;

struct TrainOptions {
  // Periodic checkpoints (config cadence) and the final one go here when set.
  std::filesystem::path checkpoint_dir;
  std::function<void(const TrainLogEntry&)> on_step;
};

// One frame per iteration, frames visited in a seeded shuffled order each
// epoch, Adam updates with the stepped learning-rate schedule. Runs
// cfg.iterations steps on an initialised detector. Frame loading errors are
// rethrown with the frame index.
nn::AdamState train(Detector& detector, std::size_t frame_count, const FrameProvider& frames,
                    const TrainOptions& options = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, long iteration);

}  // namespace mmfusion::detector
