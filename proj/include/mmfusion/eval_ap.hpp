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

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmfusion/overlap_nms.hpp"
#include "mmfusion/types.hpp"

namespace mmfusion::eval {

enum class Difficulty { kEasy = 0, kModerate = 1, kHard = 2, kIgnored = 3 };

struct DifficultyBin {
  const char* name;
  double min_bbox_height;  // pixels
  int max_occlusion;
  double max_truncation;
};

// KITTI object benchmark thresholds: easy, moderate, hard.
const std::array<DifficultyBin, 3>& difficulty_bins();

// True when the object satisfies every limit of `bin`. Eligibility nests:
// easy objects are also moderate and hard.
bool eligible(const GroundTruthObject& gt, const DifficultyBin& bin);

// Strictest bin the object qualifies for.
Difficulty assign_difficulty(const GroundTruthObject& gt);

enum class Metric { kBev, k3d };
enum class Interpolation { kR11, kR40 };

overlap::BoxIou metric_iou(Metric metric);

enum class DetFlag { kTruePositive, kFalsePositive, kIgnored };

struct FrameMatch {
  std::vector<DetFlag> det_flags;    // one per detection, input order
  std::vector<char> gt_matched;      // one per ground-truth object
  std::size_t eligible_gt_count = 0; // Car objects eligible for the bin
};

// Greedy matching of score-sorted detections. Each detection takes the unmatched
// eligible Car with the highest IoU >= threshold (TP). Failing that, a match to an
// unmatched non-eligible Car or Van, or a 2D overlap with a DontCare region,
// makes it neither TP nor FP. Anything else is a FP. Non-Car detections are
// ignored. Throws ValueError if detections are not sorted by descending score.
FrameMatch match_frame(std::span<const GroundTruthObject> dets,
                       std::span<const GroundTruthObject> gts, const overlap::BoxIou& iou,
                       double iou_threshold, const DifficultyBin& bin);

struct PRSample {
  double threshold = 0;
  double precision = 0;
  double recall = 0;
};

// Precision/recall after each distinct score level, highest score first.
std::vector<PRSample> pr_curve(std::vector<std::pair<double, bool>> scored_hits,
                               std::size_t positives);

// Mean over the recall anchors (0, 0.1, ..., 1 for R11; 1/40, ..., 1 for R40) of
// the best precision reached at recall >= anchor.
double average_precision(std::span<const PRSample> samples, Interpolation mode);

struct BinResult {
  std::string bin;
  double ap = 0;
  std::size_t ground_truths = 0;
};

struct EvalResult {
  Metric metric = Metric::kBev;
  std::array<BinResult, 3> bins;
};

using FrameObjects = std::map<std::string, std::vector<GroundTruthObject>>;

// Both maps must hold the same frame ids; otherwise throws ValueError listing
// the mismatched ids.
EvalResult evaluate(const FrameObjects& dets, const FrameObjects& gts, Metric metric,
                    Interpolation mode = Interpolation::kR11, double iou_threshold = 0.7);

std::string format_table(std::span<const EvalResult> results);
std::string format_csv(std::span<const EvalResult> results);
const char* metric_name(Metric metric);

}  // namespace mmfusion::eval
