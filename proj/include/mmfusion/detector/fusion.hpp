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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmfusion/detector/extractor.hpp"
#include "mmfusion/nn/layers.hpp"

namespace mmfusion::detector {

// Quarter -> bilinear 2x -> 3x3 conv -> max with half -> bilinear 2x -> 3x3
// conv -> max with full.
class MultiLevelFusion {
 public:
  MultiLevelFusion() = default;
  MultiLevelFusion(const std::string& prefix, int base_channels);

  nn::Tensor4 forward(const PyramidFeatures& p);
  PyramidFeatures backward(const nn::Tensor4& dy);
  // Layer shapes given the pyramid shapes (full, half, quarter).
  std::vector<NamedShape> trace_shapes(const nn::Shape4& full, const nn::Shape4& half,
                                       const nn::Shape4& quarter) const;

  std::vector<nn::Parameter*> parameters();
  void initialize(nn::Rng& rng);

 private:
  int base_ = 0;
  nn::BilinearUpsample2x up1_, up2_;
  nn::Conv2d conv8_, conv9_;
  nn::ElementwiseMax max1_, max2_;
};

// 1x1 convolution to one channel, initialised to the channel mean.
class ChannelReducer {
 public:
  ChannelReducer() = default;
  ChannelReducer(const std::string& prefix, int in_channels);

  nn::Tensor4 forward(const nn::Tensor4& x) { return conv_.forward(x); }
  nn::Tensor4 backward(const nn::Tensor4& dy) { return conv_.backward(dy); }
  nn::Shape4 output_shape(const nn::Shape4& in) const { return conv_.output_shape(in); }
  std::vector<nn::Parameter*> parameters() { return conv_.parameters(); }
  void initialize();

 private:
  int in_ = 0;
  nn::Conv2d conv_;
};

// ROI-pools each candidate from both views and averages the two vectors. A
// candidate whose window is missing or empty in one view uses the other view's
// vector alone; one missing in both is dropped.
class RoiFusion {
 public:
  struct Result {
    std::vector<double> features;  // kept.size() rows of pooled*pooled*C values
    std::vector<std::size_t> kept;  // candidate indices, input order
    int width = 0;
  };

  Result forward(const nn::Tensor4& map_img, const nn::Tensor4& map_bev,
                 std::span<const std::optional<nn::RoiWindow>> rois_img,
                 std::span<const std::optional<nn::RoiWindow>> rois_bev, int pooled);
  // Scatters row gradients back into gradients of the two maps (same shapes as
  // the forward inputs).
  void backward(std::span<const double> dfeatures, nn::Tensor4& dmap_img,
                nn::Tensor4& dmap_bev) const;

 private:
  struct Route {
    std::vector<std::size_t> img, bev;  // argmax per output, empty when the view is unused
    double img_weight = 0, bev_weight = 0;
  };
  std::vector<Route> routes_;
  nn::Shape4 img_shape_, bev_shape_;
  int width_ = 0;
};

// True when the window, clipped to the map, covers no whole cell.
bool roi_is_degenerate(const nn::Shape4& map, const nn::RoiWindow& roi);

}  // namespace mmfusion::detector
