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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmfusion/bev_encoder.hpp"
#include "mmfusion/config.hpp"
#include "mmfusion/dataset.hpp"
#include "mmfusion/detector/extractor.hpp"
#include "mmfusion/detector/fusion.hpp"
#include "mmfusion/detector/heads.hpp"
#include "mmfusion/image.hpp"
#include "mmfusion/overlap_nms.hpp"

namespace mmfusion::detector {

// Everything the network needs from one frame, computed once.
struct PreparedFrame {
  std::string id;
  nn::Tensor4 image;  // letterboxed, (1, H, W, 3)
  bev::BevMaps bev;
  image::Letterbox letterbox;
  ImageSize raw_image;
  Calibration calib;

  std::vector<Box3D> anchors;  // anchors over occupied cells
  std::vector<std::optional<nn::RoiWindow>> anchor_image_windows;
  std::vector<std::optional<nn::RoiWindow>> anchor_bev_windows;

  std::vector<Box3D> gt_boxes;  // Car labels in the LIDAR frame
  std::vector<overlap::Assignment> anchor_assignments;
};

PreparedFrame prepare_frame(const data::Frame& frame, const DetectorConfig& cfg);

std::optional<nn::RoiWindow> bev_window(const Box3D& box, const BevGridSpec& grid);
std::optional<nn::RoiWindow> image_window(const Box3D& box, const PreparedFrame& frame);

struct Proposal {
  Box3D box;
  double objectness = 0;
};

struct ShapeTrace {
  std::vector<NamedShape> image, bev;
};

// Options for one training step. The fixed fields freeze the sampled anchor
// set and the proposal set, which makes the step a smooth function of the
// parameters (used for gradient checking).
struct StepOptions {
  std::uint64_t sample_seed = 0;
  const std::vector<std::size_t>* rpn_sample = nullptr;  // anchor indices
  const std::vector<Box3D>* proposals = nullptr;         // used as the DH batch, in order
  bool backward = true;
};

struct StepResult {
  LossBreakdown loss;
  std::vector<std::size_t> rpn_sample;
  std::vector<Box3D> proposals;  // the DH batch
  int rpn_positives = 0;
  int dh_positives = 0;
};

class Detector {
 public:
  explicit Detector(const DetectorConfig& cfg);

  const DetectorConfig& config() const { return cfg_; }
  void initialize(std::uint64_t seed);
  std::vector<nn::Parameter*> parameters();
  void zero_grad();

  // Layer shapes for the configured input sizes, without running the network.
  ShapeTrace trace_shapes() const;

  // Proposals after NMS, best first, at most `top_k`.
  std::vector<Proposal> propose(const PreparedFrame& frame, int top_k);
  // Full inference: proposals, detection head, final NMS.
  std::vector<Detection> detect(const PreparedFrame& frame);
  // Forward, losses and (optionally) backward; gradients accumulate into the
  // parameters and are not cleared here.
  StepResult train_step(const PreparedFrame& frame, const StepOptions& options);

  HeadNetwork& rpn_head() { return rpn_head_; }
  HeadNetwork& dh_head() { return dh_head_; }

 private:
  struct Maps {
    nn::Tensor4 fused_img, fused_bev, reduced_img, reduced_bev;
  };
  Maps forward_features(const PreparedFrame& frame);
  void backward_features(const Maps& grads);
  std::vector<Proposal> proposals_from(const PreparedFrame& frame, const Maps& maps, int top_k);
  std::vector<double> dh_features(const PreparedFrame& frame, const Maps& maps,
                                  std::span<const Box3D> boxes, RoiFusion& fusion,
                                  std::vector<std::size_t>& kept);

  DetectorConfig cfg_;
  FeatureExtractor ext_img_, ext_bev_;
  MultiLevelFusion mlf_img_, mlf_bev_;
  ChannelReducer red_img_, red_bev_;
  HeadNetwork rpn_head_, dh_head_;
  RoiFusion rpn_fusion_, dh_fusion_;
};

// Box with yaw snapped to the nearer of 0 and pi/2, for use as a proposal.
Box3D snap_to_anchor_orientation(const Box3D& box);

}  // namespace mmfusion::detector
