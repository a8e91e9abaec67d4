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

#include "mmfusion/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mmfusion/error.hpp"

namespace mmfusion::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using ConstMapRow = Eigen::Map<const Eigen::RowVectorXd>;

void check_channels(const Shape4& s, int expected, const std::string& who) {
  if (s.c != expected) {
    throw ShapeError(who + ": expected " + std::to_string(expected) + " input channels, got " +
                     s.str());
  }
}

// Unfolds sliding windows into rows: (n*out_h*out_w) x (kh*kw*c), column order (ky, kx, c).
RowMat im2col(const Tensor4& x, const WindowGeometry& g) {
  const Shape4& s = x.shape();
  const int c = s.c;
  RowMat cols(static_cast<Eigen::Index>(s.n) * g.out_h * g.out_w,
              static_cast<Eigen::Index>(g.kh) * g.kw * c);
  double* row = cols.data();
  for (int n = 0; n < s.n; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        for (int ky = 0; ky < g.kh; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          for (int kx = 0; kx < g.kw; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (iy < 0 || iy >= s.h || ix < 0 || ix >= s.w) {
              std::fill(row, row + c, 0.0);
            } else {
              const double* src = x.data() + x.index(n, iy, ix, 0);
              std::copy(src, src + c, row);
            }
            row += c;
          }
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatters window rows back, summing overlaps.
Tensor4 col2im(const RowMat& cols, const WindowGeometry& g, const Shape4& shape) {
  Tensor4 x(shape);
  const int c = shape.c;
  const double* row = cols.data();
  for (int n = 0; n < shape.n; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        for (int ky = 0; ky < g.kh; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          for (int kx = 0; kx < g.kw; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (iy >= 0 && iy < shape.h && ix >= 0 && ix < shape.w) {
              double* dst = x.data() + x.index(n, iy, ix, 0);
              for (int k = 0; k < c; ++k) dst[k] += row[k];
            }
            row += c;
          }
        }
      }
    }
  }
  return x;
}

// Stride-1 convolution as one GEMM per kernel tap. The input is copied into a
// zero-padded buffer whose rows are `wp` = out_w + kw - 1 pixels wide; outputs
// are computed on the same padded width, so every tap reads one contiguous
// block. The last kw - 1 columns of each output row are discarded.
struct TapLayout {
  int wp = 0;
  Eigen::Index out_rows = 0;   // out_h * wp
  Eigen::Index pad_rows = 0;   // (out_h + kh) * wp, one spare row for the discarded columns
};

TapLayout tap_layout(const WindowGeometry& g) {
  TapLayout t;
  t.wp = g.out_w + g.kw - 1;
  t.out_rows = static_cast<Eigen::Index>(g.out_h) * t.wp;
  t.pad_rows = static_cast<Eigen::Index>(g.out_h + g.kh) * t.wp;
  return t;
}

void pad_item(const Tensor4& x, int n, const WindowGeometry& g, const TapLayout& t, RowMat& xp) {
  const int c = x.shape().c;
  xp.setZero(t.pad_rows, c);
  for (int iy = 0; iy < g.in_h; ++iy) {
    const int py = iy + g.pad_top;
    if (py < 0 || py >= g.out_h + g.kh - 1) continue;
    for (int ix = 0; ix < g.in_w; ++ix) {
      const int px = ix + g.pad_left;
      if (px < 0 || px >= t.wp) continue;
      const double* src = x.data() + x.index(n, iy, ix, 0);
      std::copy(src, src + c, xp.data() + (static_cast<Eigen::Index>(py) * t.wp + px) * c);
    }
  }
}

Eigen::Index tap_offset(const TapLayout& t, int ky, int kx, int c) {
  return (static_cast<Eigen::Index>(ky) * t.wp + kx) * c;
}

void conv_taps_forward(const Tensor4& x, std::span<const double> weight, const WindowGeometry& g,
                       int cout, Tensor4& y) {
  const int cin = x.shape().c;
  const TapLayout t = tap_layout(g);
  ConstMapMat w(weight.data(), static_cast<Eigen::Index>(g.kh) * g.kw * cin, cout);
  RowMat xp, yp;
  for (int n = 0; n < x.shape().n; ++n) {
    pad_item(x, n, g, t, xp);
    yp.setZero(t.out_rows, cout);
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        yp.noalias() += ConstMapMat(xp.data() + tap_offset(t, ky, kx, cin), t.out_rows, cin) *
                        w.middleRows((ky * g.kw + kx) * cin, cin);
      }
    }
    for (int oy = 0; oy < g.out_h; ++oy) {
      const double* src = yp.data() + static_cast<Eigen::Index>(oy) * t.wp * cout;
      std::copy(src, src + static_cast<std::size_t>(g.out_w) * cout, y.data() + y.index(n, oy, 0, 0));
    }
  }
}

// Accumulates the weight gradient and, when dx is given, writes the input gradient.
void conv_taps_backward(const Tensor4& x, const Tensor4& dy, std::span<const double> weight,
                        std::span<double> dweight, const WindowGeometry& g, Tensor4* dx) {
  const int cin = x.shape().c, cout = dy.shape().c;
  const TapLayout t = tap_layout(g);
  const Eigen::Index k = static_cast<Eigen::Index>(g.kh) * g.kw * cin;
  ConstMapMat w(weight.data(), k, cout);
  MapMat dw(dweight.data(), k, cout);
  RowMat xp, dyp, dxp;
  for (int n = 0; n < x.shape().n; ++n) {
    pad_item(x, n, g, t, xp);
    dyp.setZero(t.out_rows, cout);
    for (int oy = 0; oy < g.out_h; ++oy) {
      const double* src = dy.data() + dy.index(n, oy, 0, 0);
      std::copy(src, src + static_cast<std::size_t>(g.out_w) * cout,
                dyp.data() + static_cast<Eigen::Index>(oy) * t.wp * cout);
    }
    if (dx) dxp.setZero(t.pad_rows, cin);
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const Eigen::Index off = tap_offset(t, ky, kx, cin);
        const Eigen::Index row0 = (static_cast<Eigen::Index>(ky) * g.kw + kx) * cin;
        dw.middleRows(row0, cin).noalias() +=
            ConstMapMat(xp.data() + off, t.out_rows, cin).transpose() * dyp;
        if (dx) {
          MapMat(dxp.data() + off, t.out_rows, cin).noalias() +=
              dyp * w.middleRows(row0, cin).transpose();
        }
      }
    }
    if (!dx) continue;
    for (int iy = 0; iy < g.in_h; ++iy) {
      const int py = iy + g.pad_top;
      if (py < 0 || py >= g.out_h + g.kh - 1) continue;
      for (int ix = 0; ix < g.in_w; ++ix) {
        const int px = ix + g.pad_left;
        if (px < 0 || px >= t.wp) continue;
        const double* src = dxp.data() + (static_cast<Eigen::Index>(py) * t.wp + px) * cin;
        std::copy(src, src + cin, dx->data() + dx->index(n, iy, ix, 0));
      }
    }
  }
}

bool is_pointwise(const WindowGeometry& g) {
  return g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad_top == 0 && g.pad_left == 0;
}

void apply_relu(Tensor4& y) {
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
}

// dy masked by the forward activation pattern.
Tensor4 relu_backward(const Tensor4& dy, const Tensor4& out) {
  Tensor4 d = dy;
  const double* o = out.data();
  double* p = d.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(o[i] > 0.0)) p[i] = 0.0;
  }
  return d;
}

WindowGeometry upsample_geometry(int in_h, int in_w) {
  // The transposed operator is the adjoint of a 4x4 / stride 2 / pad 1 convolution
  // over the 2x output grid.
  return WindowGeometry::make(in_h * 2, in_w * 2, 4, 4, 2, Padding::kSame);
}

}  // namespace

Parameter::Parameter(std::string name_in, std::vector<int> shape_in)
    : name(std::move(name_in)), shape(std::move(shape_in)) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  value.assign(n, 0.0);
  grad.assign(n, 0.0);
}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

WindowGeometry WindowGeometry::make(int in_h, int in_w, int kh, int kw, int stride, Padding pad) {
  if (stride < 1 || kh < 1 || kw < 1) throw ShapeError("invalid window geometry");
  WindowGeometry g;
  g.kh = kh;
  g.kw = kw;
  g.stride = stride;
  g.in_h = in_h;
  g.in_w = in_w;
  if (pad == Padding::kSame) {
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    g.pad_top = std::max((g.out_h - 1) * stride + kh - in_h, 0) / 2;
    g.pad_left = std::max((g.out_w - 1) * stride + kw - in_w, 0) / 2;
  } else {
    if (in_h < kh || in_w < kw) {
      throw ShapeError("valid convolution input smaller than kernel");
    }
    g.out_h = (in_h - kh) / stride + 1;
    g.out_w = (in_w - kw) / stride + 1;
  }
  return g;
}

Tensor4 conv2d(const Tensor4& x, std::span<const double> weight, std::span<const double> bias,
               const WindowGeometry& g, int cout, bool relu) {
  const Shape4& s = x.shape();
  const Eigen::Index k = static_cast<Eigen::Index>(g.kh) * g.kw * s.c;
  if (weight.size() != static_cast<std::size_t>(k) * cout || bias.size() != static_cast<std::size_t>(cout)) {
    throw ShapeError("conv2d: kernel does not match input channels " + s.str());
  }
  Tensor4 y({s.n, g.out_h, g.out_w, cout});
  const Eigen::Index rows = static_cast<Eigen::Index>(s.n) * g.out_h * g.out_w;
  MapMat out(y.data(), rows, cout);
  ConstMapMat w(weight.data(), k, cout);
  if (is_pointwise(g)) {
    out.noalias() = ConstMapMat(x.data(), rows, s.c) * w;
  } else if (g.stride == 1) {
    conv_taps_forward(x, weight, g, cout, y);
  } else {
    const RowMat cols = im2col(x, g);
    out.noalias() = cols * w;
  }
  out.rowwise() += ConstMapRow(bias.data(), cout);
  if (relu) apply_relu(y);
  return y;
}

Tensor4 conv2d_transpose(const Tensor4& x, std::span<const double> weight,
                         std::span<const double> bias, int cout, bool relu) {
  const Shape4& s = x.shape();
  const Eigen::Index k = 16 * static_cast<Eigen::Index>(cout);
  if (weight.size() != static_cast<std::size_t>(k) * s.c || bias.size() != static_cast<std::size_t>(cout)) {
    throw ShapeError("conv2d_transpose: kernel does not match input channels " + s.str());
  }
  const WindowGeometry g = upsample_geometry(s.h, s.w);
  const Eigen::Index rows = static_cast<Eigen::Index>(s.n) * s.h * s.w;
  RowMat cols = ConstMapMat(x.data(), rows, s.c) * ConstMapMat(weight.data(), k, s.c).transpose();
  Tensor4 y = col2im(cols, g, {s.n, s.h * 2, s.w * 2, cout});
  MapMat(y.data(), static_cast<Eigen::Index>(y.size() / cout), cout).rowwise() +=
      ConstMapRow(bias.data(), cout);
  if (relu) apply_relu(y);
  return y;
}

Tensor4 max_pool2d(const Tensor4& x) {
  MaxPool2d pool;
  return pool.forward(x);
}

Tensor4 bilinear_upsample2x(const Tensor4& x) {
  BilinearUpsample2x up;
  return up.forward(x);
}

Tensor4 elementwise_fuse(const Tensor4& a, const Tensor4& b, FuseMode mode) {
  if (a.shape() != b.shape()) {
    throw ShapeError("elementwise fuse: " + a.shape().str() + " vs " + b.shape().str());
  }
  Tensor4 y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y.data()[i] = mode == FuseMode::kMax ? std::max(a.data()[i], b.data()[i])
                                         : 0.5 * (a.data()[i] + b.data()[i]);
  }
  return y;
}

Tensor4 relu(const Tensor4& x) {
  Tensor4 y = x;
  apply_relu(y);
  return y;
}

std::vector<double> roi_pool(const Tensor4& x, const RoiWindow& roi, int pooled,
                             std::vector<std::size_t>* argmax) {
  const Shape4& s = x.shape();
  if (pooled < 1) throw ValueError("roi_pool: pooled size must be positive");
  const int r0 = std::clamp(static_cast<int>(std::floor(roi.row_min)), 0, s.h);
  const int r1 = std::clamp(static_cast<int>(std::ceil(roi.row_max)), 0, s.h);
  const int c0 = std::clamp(static_cast<int>(std::floor(roi.col_min)), 0, s.w);
  const int c1 = std::clamp(static_cast<int>(std::ceil(roi.col_max)), 0, s.w);
  if (r1 <= r0 || c1 <= c0) throw DegenerateError("roi_pool: ROI has zero area after clipping");

  const double bin_h = static_cast<double>(r1 - r0) / pooled;
  const double bin_w = static_cast<double>(c1 - c0) / pooled;
  std::vector<double> out(static_cast<std::size_t>(pooled) * pooled * s.c);
  if (argmax) argmax->assign(out.size(), 0);
  // floor/ceil bin edges always cover at least one cell, so no bin is empty.
  for (int py = 0; py < pooled; ++py) {
    const int ys = r0 + static_cast<int>(std::floor(py * bin_h));
    const int ye = std::min(r1, r0 + static_cast<int>(std::ceil((py + 1) * bin_h)));
    for (int px = 0; px < pooled; ++px) {
      const int xs = c0 + static_cast<int>(std::floor(px * bin_w));
      const int xe = std::min(c1, c0 + static_cast<int>(std::ceil((px + 1) * bin_w)));
      const std::size_t o = (static_cast<std::size_t>(py) * pooled + px) * s.c;
      for (int c = 0; c < s.c; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (int yy = ys; yy < ye; ++yy) {
          for (int xx = xs; xx < xe; ++xx) {
            const std::size_t i = x.index(0, yy, xx, c);
            if (x.data()[i] > best) {
              best = x.data()[i];
              best_i = i;
            }
          }
        }
        out[o + c] = best;
        if (argmax) (*argmax)[o + c] = best_i;
      }
    }
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits, int cols) {
  std::vector<double> p(logits.size());
  for (std::size_t r = 0; r + cols <= logits.size(); r += cols) {
    double m = logits[r];
    for (int j = 1; j < cols; ++j) m = std::max(m, logits[r + j]);
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      p[r + j] = std::exp(logits[r + j] - m);
      sum += p[r + j];
    }
    for (int j = 0; j < cols; ++j) p[r + j] /= sum;
  }
  return p;
}

// ---- Conv2d -----------------------------------------------------------------

Conv2d::Conv2d(std::string name, int kh, int kw, int cin, int cout, int stride, Padding pad,
               bool relu)
    : name_(std::move(name)),
      kh_(kh),
      kw_(kw),
      cin_(cin),
      cout_(cout),
      stride_(stride),
      pad_(pad),
      relu_(relu),
      weight_(name_ + ".weight", {kh, kw, cin, cout}),
      bias_(name_ + ".bias", {cout}) {}

Shape4 Conv2d::output_shape(const Shape4& in) const {
  check_channels(in, cin_, name_);
  const WindowGeometry g = WindowGeometry::make(in.h, in.w, kh_, kw_, stride_, pad_);
  return {in.n, g.out_h, g.out_w, cout_};
}

Tensor4 Conv2d::forward(const Tensor4& x) {
  check_channels(x.shape(), cin_, name_);
  const WindowGeometry g = WindowGeometry::make(x.shape().h, x.shape().w, kh_, kw_, stride_, pad_);
  input_ = x;
  output_ = conv2d(x, weight_.value, bias_.value, g, cout_, relu_);
  return output_;
}

Tensor4 Conv2d::backward(const Tensor4& dy, bool input_grad) {
  if (dy.shape() != output_.shape()) throw ShapeError(name_ + ": gradient shape mismatch");
  const Tensor4 dpre = relu_ ? relu_backward(dy, output_) : dy;
  const Shape4& s = input_.shape();
  const WindowGeometry g = WindowGeometry::make(s.h, s.w, kh_, kw_, stride_, pad_);
  const Eigen::Index rows = static_cast<Eigen::Index>(s.n) * g.out_h * g.out_w;
  const Eigen::Index k = static_cast<Eigen::Index>(kh_) * kw_ * cin_;
  ConstMapMat d(dpre.data(), rows, cout_);
  ConstMapMat w(weight_.value.data(), k, cout_);
  MapMat dw(weight_.grad.data(), k, cout_);
  Eigen::Map<Eigen::RowVectorXd>(bias_.grad.data(), cout_) += d.colwise().sum();
  if (is_pointwise(g)) {
    ConstMapMat cols(input_.data(), rows, cin_);
    dw.noalias() += cols.transpose() * d;
    if (!input_grad) return {};
    Tensor4 dx(s);
    MapMat(dx.data(), rows, cin_).noalias() = d * w.transpose();
    return dx;
  }
  if (g.stride == 1) {
    if (!input_grad) {
      conv_taps_backward(input_, dpre, weight_.value, weight_.grad, g, nullptr);
      return {};
    }
    Tensor4 dx(s);
    conv_taps_backward(input_, dpre, weight_.value, weight_.grad, g, &dx);
    return dx;
  }
  const RowMat cols = im2col(input_, g);
  dw.noalias() += cols.transpose() * d;
  if (!input_grad) return {};
  const RowMat dcols = d * w.transpose();
  return col2im(dcols, g, s);
}

// ---- ConvTranspose2d --------------------------------------------------------

ConvTranspose2d::ConvTranspose2d(std::string name, int cin, int cout, bool relu)
    : name_(std::move(name)),
      cin_(cin),
      cout_(cout),
      relu_(relu),
      weight_(name_ + ".weight", {4, 4, cout, cin}),
      bias_(name_ + ".bias", {cout}) {}

Shape4 ConvTranspose2d::output_shape(const Shape4& in) const {
  check_channels(in, cin_, name_);
  return {in.n, in.h * 2, in.w * 2, cout_};
}

Tensor4 ConvTranspose2d::forward(const Tensor4& x) {
  check_channels(x.shape(), cin_, name_);
  input_ = x;
  output_ = conv2d_transpose(x, weight_.value, bias_.value, cout_, relu_);
  return output_;
}

Tensor4 ConvTranspose2d::backward(const Tensor4& dy) {
  if (dy.shape() != output_.shape()) throw ShapeError(name_ + ": gradient shape mismatch");
  const Tensor4 dpre = relu_ ? relu_backward(dy, output_) : dy;
  const Shape4& s = input_.shape();
  const WindowGeometry g = upsample_geometry(s.h, s.w);
  const Eigen::Index rows = static_cast<Eigen::Index>(s.n) * s.h * s.w;
  const Eigen::Index k = 16 * static_cast<Eigen::Index>(cout_);
  Eigen::Map<Eigen::RowVectorXd>(bias_.grad.data(), cout_) +=
      ConstMapMat(dpre.data(), static_cast<Eigen::Index>(dpre.size() / cout_), cout_)
          .colwise()
          .sum();
  const RowMat cols = im2col(dpre, g);
  ConstMapMat x(input_.data(), rows, cin_);
  MapMat(weight_.grad.data(), k, cin_).noalias() += cols.transpose() * x;
  Tensor4 dx(s);
  MapMat(dx.data(), rows, cin_).noalias() = cols * ConstMapMat(weight_.value.data(), k, cin_);
  return dx;
}

// ---- MaxPool2d --------------------------------------------------------------

Shape4 MaxPool2d::output_shape(const Shape4& in) {
  return {in.n, (in.h + 1) / 2, (in.w + 1) / 2, in.c};
}

Tensor4 MaxPool2d::forward(const Tensor4& x) {
  in_shape_ = x.shape();
  const Shape4 os = output_shape(in_shape_);
  Tensor4 y(os);
  argmax_.assign(y.size(), 0);
  const Shape4& s = in_shape_;
  std::size_t o = 0;
  for (int n = 0; n < os.n; ++n) {
    for (int oy = 0; oy < os.h; ++oy) {
      const int y0 = 2 * oy, y1 = std::min(2 * oy + 1, s.h - 1);
      for (int ox = 0; ox < os.w; ++ox) {
        const int x0 = 2 * ox, x1 = std::min(2 * ox + 1, s.w - 1);
        const std::size_t taps[4] = {x.index(n, y0, x0, 0), x.index(n, y0, x1, 0),
                                     x.index(n, y1, x0, 0), x.index(n, y1, x1, 0)};
        for (int c = 0; c < s.c; ++c, ++o) {
          std::size_t best = taps[0] + c;
          for (int t = 1; t < 4; ++t) {
            if (x.data()[taps[t] + c] > x.data()[best]) best = taps[t] + c;
          }
          y.data()[o] = x.data()[best];
          argmax_[o] = best;
        }
      }
    }
  }
  return y;
}

Tensor4 MaxPool2d::backward(const Tensor4& dy) const {
  if (dy.size() != argmax_.size()) throw ShapeError("max_pool2d: gradient shape mismatch");
  Tensor4 dx(in_shape_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) dx.data()[argmax_[o]] += dy.data()[o];
  return dx;
}

// ---- BilinearUpsample2x -----------------------------------------------------

namespace {

struct Tap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

Tap half_pixel_tap(int out_index, int in_size) {
  double src = (out_index + 0.5) / 2.0 - 0.5;
  if (src < 0.0) src = 0.0;
  const int i0 = std::min(static_cast<int>(src), in_size - 1);
  const int i1 = std::min(i0 + 1, in_size - 1);
  return {i0, i1, src - i0};
}

}  // namespace

Tensor4 BilinearUpsample2x::forward(const Tensor4& x) {
  in_shape_ = x.shape();
  const Shape4& s = in_shape_;
  Tensor4 y(output_shape(s));
  for (int n = 0; n < s.n; ++n) {
    for (int oy = 0; oy < 2 * s.h; ++oy) {
      const Tap ty = half_pixel_tap(oy, s.h);
      for (int ox = 0; ox < 2 * s.w; ++ox) {
        const Tap tx = half_pixel_tap(ox, s.w);
        const double* a = x.data() + x.index(n, ty.i0, tx.i0, 0);
        const double* b = x.data() + x.index(n, ty.i0, tx.i1, 0);
        const double* c = x.data() + x.index(n, ty.i1, tx.i0, 0);
        const double* d = x.data() + x.index(n, ty.i1, tx.i1, 0);
        double* out = y.data() + y.index(n, oy, ox, 0);
        const double wa = (1 - ty.w1) * (1 - tx.w1), wb = (1 - ty.w1) * tx.w1;
        const double wc = ty.w1 * (1 - tx.w1), wd = ty.w1 * tx.w1;
        for (int ch = 0; ch < s.c; ++ch) {
          out[ch] = wa * a[ch] + wb * b[ch] + wc * c[ch] + wd * d[ch];
        }
      }
    }
  }
  return y;
}

Tensor4 BilinearUpsample2x::backward(const Tensor4& dy) const {
  const Shape4& s = in_shape_;
  if (dy.shape() != output_shape(s)) throw ShapeError("bilinear: gradient shape mismatch");
  Tensor4 dx(s);
  for (int n = 0; n < s.n; ++n) {
    for (int oy = 0; oy < 2 * s.h; ++oy) {
      const Tap ty = half_pixel_tap(oy, s.h);
      for (int ox = 0; ox < 2 * s.w; ++ox) {
        const Tap tx = half_pixel_tap(ox, s.w);
        const double* g = dy.data() + dy.index(n, oy, ox, 0);
        double* a = dx.data() + dx.index(n, ty.i0, tx.i0, 0);
        double* b = dx.data() + dx.index(n, ty.i0, tx.i1, 0);
        double* c = dx.data() + dx.index(n, ty.i1, tx.i0, 0);
        double* d = dx.data() + dx.index(n, ty.i1, tx.i1, 0);
        const double wa = (1 - ty.w1) * (1 - tx.w1), wb = (1 - ty.w1) * tx.w1;
        const double wc = ty.w1 * (1 - tx.w1), wd = ty.w1 * tx.w1;
        for (int ch = 0; ch < s.c; ++ch) {
          a[ch] += wa * g[ch];
          b[ch] += wb * g[ch];
          c[ch] += wc * g[ch];
          d[ch] += wd * g[ch];
        }
      }
    }
  }
  return dx;
}

// ---- ElementwiseMax ---------------------------------------------------------

Tensor4 ElementwiseMax::forward(const Tensor4& a, const Tensor4& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("elementwise max: " + a.shape().str() + " vs " + b.shape().str());
  }
  shape_ = a.shape();
  took_a_.resize(a.size());
  Tensor4 y(shape_);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool ta = a.data()[i] >= b.data()[i];
    took_a_[i] = ta;
    y.data()[i] = ta ? a.data()[i] : b.data()[i];
  }
  return y;
}

void ElementwiseMax::backward(const Tensor4& dy, Tensor4& da, Tensor4& db) const {
  if (dy.shape() != shape_) throw ShapeError("elementwise max: gradient shape mismatch");
  da = Tensor4(shape_);
  db = Tensor4(shape_);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    (took_a_[i] ? da : db).data()[i] = dy.data()[i];
  }
}

// ---- FullyConnected ---------------------------------------------------------

FullyConnected::FullyConnected(std::string name, int in, int out, bool relu)
    : name_(std::move(name)),
      in_(in),
      out_(out),
      relu_(relu),
      weight_(name_ + ".weight", {in, out}),
      bias_(name_ + ".bias", {out}) {}

std::vector<double> FullyConnected::forward(std::span<const double> x, int rows) {
  if (x.size() != static_cast<std::size_t>(rows) * in_) {
    throw ShapeError(name_ + ": expected " + std::to_string(in_) + " features per row");
  }
  rows_ = rows;
  input_.assign(x.begin(), x.end());
  output_.assign(static_cast<std::size_t>(rows) * out_, 0.0);
  if (rows == 0) return {};
  MapMat y(output_.data(), rows, out_);
  y.noalias() = ConstMapMat(input_.data(), rows, in_) * ConstMapMat(weight_.value.data(), in_, out_);
  y.rowwise() += ConstMapRow(bias_.value.data(), out_);
  if (relu_) {
    for (double& v : output_) v = v > 0.0 ? v : 0.0;
  }
  return {output_.begin(), output_.end()};
}

std::vector<double> FullyConnected::backward(std::span<const double> dy) {
  if (dy.size() != output_.size()) throw ShapeError(name_ + ": gradient shape mismatch");
  Buffer dpre(dy.begin(), dy.end());
  if (relu_) {
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      if (!(output_[i] > 0.0)) dpre[i] = 0.0;
    }
  }
  Buffer dx(static_cast<std::size_t>(rows_) * in_, 0.0);
  if (rows_ == 0) return {};
  ConstMapMat d(dpre.data(), rows_, out_);
  MapMat(weight_.grad.data(), in_, out_).noalias() +=
      ConstMapMat(input_.data(), rows_, in_).transpose() * d;
  Eigen::Map<Eigen::RowVectorXd>(bias_.grad.data(), out_) += d.colwise().sum();
  MapMat(dx.data(), rows_, in_).noalias() =
      d * ConstMapMat(weight_.value.data(), in_, out_).transpose();
  return {dx.begin(), dx.end()};
}

void he_uniform(Parameter& weight, int fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / std::max(fan_in, 1));
  for (double& v : weight.value) v = rng.uniform(-limit, limit);
}

}  // namespace mmfusion::nn
