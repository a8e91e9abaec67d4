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

#include <span>
#include <string>
#include <vector>

#include "mmfusion/nn/layers.hpp"

namespace mmfusion::detector {

// Two ReLU fully connected layers followed by a 2-way classification layer and
// a box regression layer.
class HeadNetwork {
 public:
  struct Output {
    int rows = 0;
    std::vector<double> logits;  // rows x 2
    std::vector<double> deltas;  // rows x regression_size
  };

  HeadNetwork() = default;
  HeadNetwork(const std::string& prefix, int in_features, int width, int regression_size);

  Output forward(std::span<const double> x, int rows);
  // Returns the gradient with respect to the input rows.
  std::vector<double> backward(std::span<const double> dlogits, std::span<const double> ddeltas);

  std::vector<nn::Parameter*> parameters();
  void initialize(nn::Rng& rng);
  // Zero weights and biases of the two output layers.
  void zero_outputs();

  int in_features() const { return fc1_.in_features(); }
  int regression_size() const { return reg_size_; }

 private:
  int reg_size_ = 0;
  nn::FullyConnected fc1_, fc2_, cls_, reg_;
};

// Objectness, the softmax probability of the second class, per row.
std::vector<double> objectness(std::span<const double> logits);

// Loss of one head over a batch. `labels` holds 1 (positive), 0 (negative) or
// -1 (excluded from both terms). Classification is the mean binary
// cross-entropy of the objectness over non-excluded rows; regression is the
// Smooth-L1 sum over positive rows divided by their count. `targets` is
// rows x regression_size (entries of non-positive rows are unused).
struct HeadLoss {
  double classification = 0;
  double regression = 0;
  int sampled = 0;
  int positives = 0;
  std::vector<double> dlogits;
  std::vector<double> ddeltas;
};

HeadLoss head_loss(std::span<const double> logits, std::span<const double> deltas,
                   std::span<const int> labels, std::span<const double> targets,
                   int regression_size);

struct LossBreakdown {
  double rpn_classification = 0;
  double rpn_regression = 0;
  double dh_classification = 0;
  double dh_regression = 0;
  bool rpn_without_positives = false;
  bool dh_without_positives = false;

  // Unit-weight sum of the four terms.
  double total() const {
    return rpn_classification + rpn_regression + dh_classification + dh_regression;
  }
};

LossBreakdown compute_losses(const HeadLoss& rpn, const HeadLoss& dh);

}  // namespace mmfusion::detector
