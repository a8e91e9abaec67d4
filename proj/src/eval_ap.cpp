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

#include "mmfusion/eval_ap.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "mmfusion/error.hpp"
#include "mmfusion/geometry.hpp"

namespace mmfusion::eval {
namespace {

constexpr double kDontCareOverlap = 0.5;

// Fraction of the detection's 2D box covered by `region`.
double covered_fraction(const GroundTruthObject& det, const GroundTruthObject& region) {
  const double iw = std::min(det.right, region.right) - std::max(det.left, region.left);
  const double ih = std::min(det.bottom, region.bottom) - std::max(det.top, region.top);
  const double area = (det.right - det.left) * (det.bottom - det.top);
  if (iw <= 0 || ih <= 0 || area <= 0) return 0.0;
  return iw * ih / area;
}

enum class GtRole { kEligible, kNeutral, kDontCare, kOther };

GtRole role_of(const GroundTruthObject& gt, const DifficultyBin& bin) {
  if (gt.class_name == "Car") return eligible(gt, bin) ? GtRole::kEligible : GtRole::kNeutral;
  if (gt.class_name == "Van") return GtRole::kNeutral;
  if (gt.class_name == "DontCare") return GtRole::kDontCare;
  return GtRole::kOther;
}

}  // namespace

const std::array<DifficultyBin, 3>& difficulty_bins() {
  static const std::array<DifficultyBin, 3> bins{{{"easy", 40.0, 0, 0.15},
                                                  {"moderate", 25.0, 1, 0.30},
                                                  {"hard", 25.0, 2, 0.50}}};
  return bins;
}

bool eligible(const GroundTruthObject& gt, const DifficultyBin& bin) {
  return gt.bbox_height() >= bin.min_bbox_height && gt.occlusion <= bin.max_occlusion &&
         gt.truncation <= bin.max_truncation;
}

Difficulty assign_difficulty(const GroundTruthObject& gt) {
  const auto& bins = difficulty_bins();
  for (int b = 0; b < 3; ++b) {
    if (eligible(gt, bins[b])) return static_cast<Difficulty>(b);
  }
  return Difficulty::kIgnored;
}

const char* metric_name(Metric metric) { return metric == Metric::kBev ? "bev" : "3d"; }

overlap::BoxIou metric_iou(Metric metric) {
  if (metric == Metric::kBev) return overlap::iou_rotated_bev;
  return overlap::iou_3d;
}

FrameMatch match_frame(std::span<const GroundTruthObject> dets,
                       std::span<const GroundTruthObject> gts, const overlap::BoxIou& iou,
                       double iou_threshold, const DifficultyBin& bin) {
  for (std::size_t i = 1; i < dets.size(); ++i) {
    if (dets[i].score.value_or(0.0) > dets[i - 1].score.value_or(0.0)) {
      throw ValueError("match_frame: detections must be sorted by descending score");
    }
  }
  FrameMatch m;
  m.det_flags.assign(dets.size(), DetFlag::kIgnored);
  m.gt_matched.assign(gts.size(), 0);

  std::vector<GtRole> roles;
  std::vector<Box3D> gt_boxes;
  for (const GroundTruthObject& gt : gts) {
    roles.push_back(role_of(gt, bin));
    if (roles.back() == GtRole::kEligible) ++m.eligible_gt_count;
    gt_boxes.push_back(roles.back() == GtRole::kEligible || roles.back() == GtRole::kNeutral
                           ? geometry::box_from_label_axes(gt)
                           : Box3D{});
  }

  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (dets[d].class_name != "Car") continue;
    const Box3D det_box = geometry::box_from_label_axes(dets[d]);
    double best_eligible = -1.0, best_neutral = -1.0;
    std::size_t eligible_idx = 0, neutral_idx = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (m.gt_matched[g]) continue;
      if (roles[g] != GtRole::kEligible && roles[g] != GtRole::kNeutral) continue;
      const double v = iou(det_box, gt_boxes[g]);
      if (v < iou_threshold) continue;
      if (roles[g] == GtRole::kEligible && v > best_eligible) {
        best_eligible = v;
        eligible_idx = g;
      } else if (roles[g] == GtRole::kNeutral && v > best_neutral) {
        best_neutral = v;
        neutral_idx = g;
      }
    }
    if (best_eligible >= 0.0) {
      m.det_flags[d] = DetFlag::kTruePositive;
      m.gt_matched[eligible_idx] = 1;
    } else if (best_neutral >= 0.0) {
      m.det_flags[d] = DetFlag::kIgnored;
      m.gt_matched[neutral_idx] = 1;
    } else {
      bool in_dontcare = false;
      for (std::size_t g = 0; g < gts.size() && !in_dontcare; ++g) {
        in_dontcare = roles[g] == GtRole::kDontCare &&
                      covered_fraction(dets[d], gts[g]) >= kDontCareOverlap;
      }
      m.det_flags[d] = in_dontcare ? DetFlag::kIgnored : DetFlag::kFalsePositive;
    }
  }
  return m;
}

std::vector<PRSample> pr_curve(std::vector<std::pair<double, bool>> scored_hits,
                               std::size_t positives) {
  std::stable_sort(scored_hits.begin(), scored_hits.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<PRSample> samples;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scored_hits.size(); ++i) {
    (scored_hits[i].second ? tp : fp) += 1;
    const bool last_of_level =
        i + 1 == scored_hits.size() || scored_hits[i + 1].first != scored_hits[i].first;
    if (!last_of_level) continue;
    PRSample s;
    s.threshold = scored_hits[i].first;
    s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    s.recall = positives ? static_cast<double>(tp) / static_cast<double>(positives) : 0.0;
    samples.push_back(s);
  }
  return samples;
}

double average_precision(std::span<const PRSample> samples, Interpolation mode) {
  const int points = mode == Interpolation::kR11 ? 11 : 40;
  double sum = 0.0;
  for (int i = 0; i < points; ++i) {
    const double anchor = mode == Interpolation::kR11 ? i / 10.0 : (i + 1) / 40.0;
    double best = 0.0;
    for (const PRSample& s : samples) {
      if (s.recall >= anchor) best = std::max(best, s.precision);
    }
    sum += best;
  }
  return sum / points;
}

EvalResult evaluate(const FrameObjects& dets, const FrameObjects& gts, Metric metric,
                    Interpolation mode, double iou_threshold) {
  std::vector<std::string> missing;
  for (const auto& [id, _] : gts) {
    if (!dets.count(id)) missing.push_back(id);
  }
  for (const auto& [id, _] : dets) {
    if (!gts.count(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string msg = "evaluate: frame ids without a counterpart:";
    for (const std::string& id : missing) msg += " " + id;
    throw ValueError(msg);
  }

  const overlap::BoxIou iou = metric_iou(metric);
  EvalResult result;
  result.metric = metric;
  for (int b = 0; b < 3; ++b) {
    const DifficultyBin& bin = difficulty_bins()[b];
    std::vector<std::pair<double, bool>> hits;
    std::size_t positives = 0;
    for (const auto& [id, frame_gts] : gts) {
      std::vector<GroundTruthObject> frame_dets = dets.at(id);
      std::stable_sort(frame_dets.begin(), frame_dets.end(), [](const auto& a, const auto& c) {
        return a.score.value_or(0.0) > c.score.value_or(0.0);
      });
      const FrameMatch m = match_frame(frame_dets, frame_gts, iou, iou_threshold, bin);
      positives += m.eligible_gt_count;
      for (std::size_t d = 0; d < frame_dets.size(); ++d) {
        if (m.det_flags[d] == DetFlag::kIgnored) continue;
        hits.emplace_back(frame_dets[d].score.value_or(0.0), m.det_flags[d] == DetFlag::kTruePositive);
      }
    }
    const auto samples = pr_curve(std::move(hits), positives);
    result.bins[b] = {bin.name, positives ? average_precision(samples, mode) : 0.0, positives};
  }
  return result;
}

std::string format_table(std::span<const EvalResult> results) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof(line), "%-8s %10s %10s %10s\n", "metric", "easy", "moderate", "hard");
  os << line;
  for (const EvalResult& r : results) {
    std::snprintf(line, sizeof(line), "%-8s %10.4f %10.4f %10.4f\n", metric_name(r.metric),
                  r.bins[0].ap, r.bins[1].ap, r.bins[2].ap);
    os << line;
  }
  return os.str();
}

std::string format_csv(std::span<const EvalResult> results) {
  std::ostringstream os;
  os << "metric,bin,ap\n";
  char buf[32];
  for (const EvalResult& r : results) {
    for (const BinResult& b : r.bins) {
      std::snprintf(buf, sizeof(buf), "%.6f", b.ap);
      os << metric_name(r.metric) << "," << b.bin << "," << buf << "\n";
    }
  }
  return os.str();
}

}  // namespace mmfusion::eval
