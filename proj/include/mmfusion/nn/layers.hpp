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
#include <span>
#include <string>
#include <vector>

#include "mmfusion/nn/tensor.hpp"

namespace mmfusion::nn {

// A trainable buffer together with its gradient accumulator.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, std::vector<int> shape);

  std::string name;
  std::vector<int> shape;
  Buffer value;
  Buffer grad;

  std::size_t size() const { return value.size(); }
  void zero_grad();
};

enum class Padding { kSame, kValid };

// Spatial geometry of a strided, padded sliding window.
struct WindowGeometry {
  int kh = 1, kw = 1;
  int stride = 1;
  int pad_top = 0, pad_left = 0;
  int in_h = 0, in_w = 0;
  int out_h = 0, out_w = 0;

  static WindowGeometry make(int in_h, int in_w, int kh, int kw, int stride, Padding pad);
};

// ---- functional kernels (stateless; used by the layers and by tests) -------

// Cross-correlation. `weight` is laid out (kh, kw, cin, cout), `bias` has cout entries.
Tensor4 conv2d(const Tensor4& x, std::span<const double> weight, std::span<const double> bias,
               const WindowGeometry& g, int cout, bool relu);

// Transposed convolution, 2x upsampling with a 4x4 kernel and padding 1. `weight` is laid
// out (4, 4, cout, cin): the same buffer, read as a conv2d kernel mapping cout -> cin
// channels at stride 2, is this operator's adjoint.
Tensor4 conv2d_transpose(const Tensor4& x, std::span<const double> weight,
                         std::span<const double> bias, int cout, bool relu);

// 2x2 / stride 2 max pooling. Odd extents are padded by replicating the last row/column.
Tensor4 max_pool2d(const Tensor4& x);

// 2x bilinear upsampling, half-pixel centres (align_corners = false), edge clamped.
Tensor4 bilinear_upsample2x(const Tensor4& x);

enum class FuseMode { kMax, kMean };
Tensor4 elementwise_fuse(const Tensor4& a, const Tensor4& b, FuseMode mode);

Tensor4 relu(const Tensor4& x);

// Region in feature-map coordinates: rows [row_min, row_max), columns [col_min, col_max).
struct RoiWindow {
  double row_min = 0, col_min = 0, row_max = 0, col_max = 0;
};

// Fast R-CNN max pooling of one ROI (batch item 0) into pooled x pooled bins.
// The returned vector is ordered (bin_row, bin_col, channel). `argmax`, when
// given, receives the flat input index of each output for backward routing.
// Throws DegenerateError if the clipped ROI covers no cell.
std::vector<double> roi_pool(const Tensor4& x, const RoiWindow& roi, int pooled,
                             std::vector<std::size_t>* argmax = nullptr);

// Row-wise softmax over a (rows x cols) row-major matrix.
std::vector<double> softmax(std::span<const double> logits, int cols);

// ---- layers with cached state for backward ---------------------------------

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int kh, int kw, int cin, int cout, int stride = 1,
         Padding pad = Padding::kSame, bool relu = true);

  Shape4 output_shape(const Shape4& in) const;
  Tensor4 forward(const Tensor4& x);
  // Accumulates parameter gradients; returns the input gradient unless
  // `input_grad` is false, in which case an empty tensor is returned.
  Tensor4 backward(const Tensor4& dy, bool input_grad = true);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  int in_channels() const { return cin_; }
  int out_channels() const { return cout_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int kh_ = 1, kw_ = 1, cin_ = 0, cout_ = 0, stride_ = 1;
  Padding pad_ = Padding::kSame;
  bool relu_ = true;
  Parameter weight_, bias_;
  Tensor4 input_, output_;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(std::string name, int cin, int cout, bool relu = true);

  Shape4 output_shape(const Shape4& in) const;
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& dy);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int cin_ = 0, cout_ = 0;
  bool relu_ = true;
  Parameter weight_, bias_;
  Tensor4 input_, output_;
};

class MaxPool2d {
 public:
  static Shape4 output_shape(const Shape4& in);
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& dy) const;

 private:
  Shape4 in_shape_;
  std::vector<std::size_t> argmax_;
};

class BilinearUpsample2x {
 public:
  static Shape4 output_shape(const Shape4& in) { return {in.n, in.h * 2, in.w * 2, in.c}; }
  Tensor4 forward(const Tensor4& x);
  Tensor4 backward(const Tensor4& dy) const;

 private:
  Shape4 in_shape_;
};

class ElementwiseMax {
 public:
  Tensor4 forward(const Tensor4& a, const Tensor4& b);
  // Gradient goes to whichever input supplied the maximum (ties go to `a`).
  void backward(const Tensor4& dy, Tensor4& da, Tensor4& db) const;

 private:
  std::vector<unsigned char> took_a_;
  Shape4 shape_;
};

// Affine map over a batch of row vectors, optional ReLU.
class FullyConnected {
 public:
  FullyConnected() = default;
  FullyConnected(std::string name, int in, int out, bool relu);

  // x is (rows x in), row-major; returns (rows x out).
  std::vector<double> forward(std::span<const double> x, int rows);
  std::vector<double> backward(std::span<const double> dy);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  std::string name_;
  int in_ = 0, out_ = 0, rows_ = 0;
  bool relu_ = false;
  Parameter weight_, bias_;
  Buffer input_, output_;
};

// He-uniform initialisation: U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), zero bias.
void he_uniform(Parameter& weight, int fan_in, Rng& rng);

}  // namespace mmfusion::nn
