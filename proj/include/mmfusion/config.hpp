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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mmfusion/anchor_gen.hpp"
#include "mmfusion/types.hpp"

namespace mmfusion {

// Flat `key = value` text; `#` starts a comment. Unknown keys are kept so that
// callers can reject them.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct DetectorConfig {
  BevGridSpec grid = BevGridSpec::full_scale();
  int image_height = 360;
  int image_width = 1200;

  // Stage-1 widths are base, 2x, 4x, 8x.
  int base_channels = 32;
  int fc_width = 256;
  int roi_pool_size = 7;

  std::vector<anchors::DimPair> anchor_dims{{3.9, 1.6}, {4.4, 1.8}};
  double anchor_height = 1.65;
  double anchor_stride = 0.5;

  double rpn_positive_iou = 0.6;
  double rpn_negative_iou = 0.4;
  double rpn_nms_iou = 0.7;
  int rpn_batch = 512;
  int proposals_train = 1024;
  int proposals_test = 300;

  double dh_positive_iou = 0.7;
  double dh_nms_iou = 0.01;
  int dh_batch = 128;
  // Adds the ground-truth boxes, yaw snapped to the anchor orientations, to the
  // proposal set during training.
  bool gt_proposals = true;

  double learning_rate = 1e-4;
  double lr_decay = 0.8;
  long decay_every = 20000;
  long iterations = 120000;
  long checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::uint64_t seed = 1;

  // Full-size KITTI configuration.
  static DetectorConfig full_scale();
  // Reduced grid and image (1/divisor of the full spatial sizes, image sides
  // rounded up to a multiple of 8) for CPU runs.
  static DetectorConfig desk(int divisor);

  // Applies recognised keys; throws ValueError on an unknown key or bad value.
  void apply(const KeyValueConfig& kv);
  std::string to_text() const;
};

DetectorConfig load_detector_config(std::string_view text);

}  // namespace mmfusion
