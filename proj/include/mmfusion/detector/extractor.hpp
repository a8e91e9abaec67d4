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

#include <string>
#include <vector>

#include "mmfusion/nn/layers.hpp"

namespace mmfusion::detector {

// Feature maps at full, half and quarter resolution (widths base, 2x, 4x).
struct PyramidFeatures {
  nn::Tensor4 full, half, quarter;
};

struct NamedShape {
  std::string layer;
  nn::Shape4 shape;
};

// Encoder / decoder / second encoder with lateral concatenations. Stage-1 sets
// are two 3x3 conv+ReLU layers of widths base, 2x, 4x, 8x separated by 2x2 max
// pooling; three 4x4 transposed convolutions climb back to full resolution;
// stage 2 has one 3x3 conv+ReLU per resolution.
class FeatureExtractor {
 public:
  FeatureExtractor() = default;
  FeatureExtractor(const std::string& prefix, int in_channels, int base_channels);

  // Spatial sides must be divisible by 8; throws ShapeError otherwise.
  PyramidFeatures forward(const nn::Tensor4& x);
  // Accumulates parameter gradients. The input gradient is not computed.
  void backward(const PyramidFeatures& grads);

  // Output shape of every layer for an input shape, without computing values.
  std::vector<NamedShape> trace_shapes(const nn::Shape4& input) const;

  std::vector<nn::Parameter*> parameters();
  void initialize(nn::Rng& rng);
  int base_channels() const { return base_; }

 private:
  int in_ = 0, base_ = 0;
  nn::Conv2d conv1a_, conv1b_, conv2a_, conv2b_, conv3a_, conv3b_, conv4a_, conv4b_;
  nn::ConvTranspose2d up1_, up2_, up3_;
  nn::Conv2d conv5_, conv6_, conv7_;
  nn::MaxPool2d pool1_, pool2_, pool3_, pool5_, pool6_;
};

}  // namespace mmfusion::detector
