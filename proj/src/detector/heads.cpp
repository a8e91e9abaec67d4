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

#include "mmfusion/detector/heads.hpp"

#include "mmfusion/error.hpp"
#include "mmfusion/nn/loss.hpp"

namespace mmfusion::detector {

HeadNetwork::HeadNetwork(const std::string& prefix, int in_features, int width, int regression_size)
    : reg_size_(regression_size),
      fc1_(prefix + ".fc1", in_features, width, true),
      fc2_(prefix + ".fc2", width, width, true),
      cls_(prefix + ".cls", width, 2, false),
      reg_(prefix + ".reg", width, regression_size, false) {}

HeadNetwork::Output HeadNetwork::forward(std::span<const double> x, int rows) {
  const std::vector<double> hidden = fc2_.forward(fc1_.forward(x, rows), rows);
  Output out;
  out.rows = rows;
  out.logits = cls_.forward(hidden, rows);
  out.deltas = reg_.forward(hidden, rows);
  return out;
}

std::vector<double> HeadNetwork::backward(std::span<const double> dlogits,
                                          std::span<const double> ddeltas) {
  std::vector<double> dh = cls_.backward(dlogits);
  const std::vector<double> dreg = reg_.backward(ddeltas);
  for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += dreg[i];
  return fc1_.backward(fc2_.backward(dh));
}

std::vector<nn::Parameter*> HeadNetwork::parameters() {
  std::vector<nn::Parameter*> out;
  for (nn::FullyConnected* fc : {&fc1_, &fc2_, &cls_, &reg_}) {
    for (nn::Parameter* p : fc->parameters()) out.push_back(p);
  }
  return out;
}

void HeadNetwork::initialize(nn::Rng& rng) {
  for (nn::FullyConnected* fc : {&fc1_, &fc2_, &cls_, &reg_}) {
    nn::he_uniform(fc->weight(), fc->in_features(), rng);
    fc->bias().value.assign(fc->bias().size(), 0.0);
  }
}

void HeadNetwork::zero_outputs() {
  for (nn::FullyConnected* fc : {&cls_, &reg_}) {
    fc->weight().value.assign(fc->weight().size(), 0.0);
    fc->bias().value.assign(fc->bias().size(), 0.0);
  }
}

std::vector<double> objectness(std::span<const double> logits) {
  const std::vector<double> p = nn::softmax(logits, 2);
  std::vector<double> out(p.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[2 * i + 1];
  return out;
}

HeadLoss head_loss(std::span<const double> logits, std::span<const double> deltas,
                   std::span<const int> labels, std::span<const double> targets,
                   int regression_size) {
  const std::size_t rows = labels.size();
  const std::size_t r = static_cast<std::size_t>(regression_size);
  if (logits.size() != 2 * rows || deltas.size() != r * rows || targets.size() != r * rows) {
    throw ShapeError("head_loss: inconsistent batch sizes");
  }
  HeadLoss out;
  out.dlogits.assign(logits.size(), 0.0);
  out.ddeltas.assign(deltas.size(), 0.0);

  const std::vector<double> prob = objectness(logits);
  std::vector<double> p_used;
  std::vector<int> l_used;
  std::vector<std::size_t> rows_used;
  std::vector<double> pred, target;
  for (std::size_t i = 0; i < rows; ++i) {
    if (labels[i] < 0) continue;
    if (labels[i] > 1) throw ValueError("head_loss: labels must be -1, 0 or 1");
    p_used.push_back(prob[i]);
    l_used.push_back(labels[i]);
    rows_used.push_back(i);
    if (labels[i] == 1) {
      ++out.positives;
      pred.insert(pred.end(), deltas.begin() + i * r, deltas.begin() + (i + 1) * r);
      target.insert(target.end(), targets.begin() + i * r, targets.begin() + (i + 1) * r);
    }
  }
  out.sampled = static_cast<int>(rows_used.size());
  if (out.sampled > 0) {
    const nn::LossWithGrad cls = nn::loss_bce(p_used, l_used);
    out.classification = cls.value;
    for (std::size_t k = 0; k < rows_used.size(); ++k) {
      // d p / d logit_1 = p (1 - p) = -d p / d logit_0
      const double p = p_used[k];
      const double g = cls.grad[k] * p * (1.0 - p);
      out.dlogits[2 * rows_used[k]] = -g;
      out.dlogits[2 * rows_used[k] + 1] = g;
    }
  }
  if (out.positives > 0) {
    const nn::LossWithGrad reg = nn::loss_smooth_l1(pred, target, out.positives);
    out.regression = reg.value;
    std::size_t k = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (labels[i] != 1) continue;
      for (std::size_t j = 0; j < r; ++j) out.ddeltas[i * r + j] = reg.grad[k * r + j];
      ++k;
    }
  }
  return out;
}

LossBreakdown compute_losses(const HeadLoss& rpn, const HeadLoss& dh) {
  LossBreakdown b;
  b.rpn_classification = rpn.classification;
  b.rpn_regression = rpn.regression;
  b.dh_classification = dh.classification;
  b.dh_regression = dh.regression;
  b.rpn_without_positives = rpn.positives == 0;
  b.dh_without_positives = dh.positives == 0;
  return b;
}

}  // namespace mmfusion::detector
