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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mmfusion/detector/trainer.hpp"
#include "mmfusion/nn/memory.hpp"
#include "mmfusion/overlap_nms.hpp"
#include "mmfusion/synthetic.hpp"

namespace {

using namespace mmfusion;

class TrainingRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { nn::retain_freed_memory(); }
};

// One car, no clutter, one frame seen 300 times.
TEST_F(TrainingRun, SingleObjectOverfit) {
  DetectorConfig cfg = DetectorConfig::desk(4);
  cfg.base_channels = 8;
  cfg.fc_width = 128;
  cfg.iterations = 300;
  synth::SceneOptions scene;
  scene.min_cars = scene.max_cars = 1;
  scene.clutter_clusters = 0;
  const data::Frame frame = synth::make_frame(3, scene, "000000");
  const detector::PreparedFrame prepared = detector::prepare_frame(frame, cfg);
  ASSERT_EQ(prepared.gt_boxes.size(), 1u);
  const Box3D& truth = prepared.gt_boxes[0];

  detector::Detector det(cfg);
  det.initialize(cfg.seed);
  detector::train(det, 1, [&](std::size_t) { return prepared; });

  const auto proposals = det.propose(prepared, cfg.proposals_test);
  ASSERT_FALSE(proposals.empty());
  EXPECT_GE(overlap::iou_rotated_bev(proposals.front().box, truth), 0.5);

  const auto detections = det.detect(prepared);
  ASSERT_FALSE(detections.empty());
  EXPECT_LE(std::abs(normalize_angle(detections.front().box.yaw - truth.yaw)), 0.1)
      << "detected " << detections.front().box.yaw << " truth " << truth.yaw;
}

TEST_F(TrainingRun, LossFallsOverFiveHundredIterations) {
  DetectorConfig cfg = DetectorConfig::desk(8);
  cfg.base_channels = 8;
  cfg.fc_width = 64;
  cfg.iterations = 500;
  std::vector<detector::PreparedFrame> frames;
  for (const auto& f : synth::make_frames(8, 7)) frames.push_back(detector::prepare_frame(f, cfg));

  detector::Detector det(cfg);
  det.initialize(cfg.seed);
  std::vector<double> window_means(5, 0.0);
  detector::TrainOptions options;
  options.on_step = [&](const detector::TrainLogEntry& e) {
    window_means[static_cast<std::size_t>(e.iteration / 100)] += e.loss.total() / 100;
  };
  detector::train(det, frames.size(), [&](std::size_t i) { return frames[i]; }, options);

  for (std::size_t w = 1; w < window_means.size(); ++w) {
    EXPECT_LT(window_means[w], window_means[w - 1]) << "window " << w;
  }
}

}  // namespace
