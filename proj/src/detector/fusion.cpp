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

#include "mmfusion/detector/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "mmfusion/error.hpp"

namespace mmfusion::detector {

MultiLevelFusion::MultiLevelFusion(const std::string& prefix, int base)
    : base_(base),
      conv8_(prefix + ".conv8", 3, 3, 4 * base, 2 * base, 1, nn::Padding::kSame, true),
      conv9_(prefix + ".conv9", 3, 3, 2 * base, base, 1, nn::Padding::kSame, true) {}

nn::Tensor4 MultiLevelFusion::forward(const PyramidFeatures& p) {
  const nn::Tensor4 c8 = conv8_.forward(up1_.forward(p.quarter));
  if (c8.shape() != p.half.shape()) {
    throw ShapeError("multi-level fusion: " + c8.shape().str() + " vs half " + p.half.shape().str());
  }
  const nn::Tensor4 m1 = max1_.forward(c8, p.half);
  const nn::Tensor4 c9 = conv9_.forward(up2_.forward(m1));
  if (c9.shape() != p.full.shape()) {
    throw ShapeError("multi-level fusion: " + c9.shape().str() + " vs full " + p.full.shape().str());
  }
  return max2_.forward(c9, p.full);
}

PyramidFeatures MultiLevelFusion::backward(const nn::Tensor4& dy) {
  PyramidFeatures g;
  nn::Tensor4 d_c9;
  max2_.backward(dy, d_c9, g.full);
  const nn::Tensor4 d_m1 = up2_.backward(conv9_.backward(d_c9));
  nn::Tensor4 d_c8;
  max1_.backward(d_m1, d_c8, g.half);
  g.quarter = up1_.backward(conv8_.backward(d_c8));
  return g;
}

std::vector<NamedShape> MultiLevelFusion::trace_shapes(const nn::Shape4& full,
                                                       const nn::Shape4& half,
                                                       const nn::Shape4& quarter) const {
  std::vector<NamedShape> t;
  const nn::Shape4 b1 = nn::BilinearUpsample2x::output_shape(quarter);
  t.push_back({"Bilinear-1", b1});
  const nn::Shape4 c8 = conv8_.output_shape(b1);
  t.push_back({"Conv-8", c8});
  if (c8 != half) throw ShapeError("Element-wise-Max-1 operands differ: " + c8.str() + " " + half.str());
  t.push_back({"Element-wise-Max-1", c8});
  const nn::Shape4 b2 = nn::BilinearUpsample2x::output_shape(c8);
  t.push_back({"Bilinear-2", b2});
  const nn::Shape4 c9 = conv9_.output_shape(b2);
  t.push_back({"Conv-9", c9});
  if (c9 != full) throw ShapeError("Element-wise-Max-2 operands differ: " + c9.str() + " " + full.str());
  t.push_back({"Element-wise-Max-2", c9});
  return t;
}

std::vector<nn::Parameter*> MultiLevelFusion::parameters() {
  std::vector<nn::Parameter*> out = conv8_.parameters();
  for (nn::Parameter* p : conv9_.parameters()) out.push_back(p);
  return out;
}

void MultiLevelFusion::initialize(nn::Rng& rng) {
  for (nn::Conv2d* c : {&conv8_, &conv9_}) {
    nn::he_uniform(c->weight(), 9 * c->in_channels(), rng);
    c->bias().value.assign(c->bias().size(), 0.0);
  }
}

ChannelReducer::ChannelReducer(const std::string& prefix, int in_channels)
    : in_(in_channels), conv_(prefix + ".conv10", 1, 1, in_channels, 1, 1, nn::Padding::kSame, false) {}

void ChannelReducer::initialize() {
  conv_.weight().value.assign(conv_.weight().size(), 1.0 / in_);
  conv_.bias().value.assign(1, 0.0);
}

bool roi_is_degenerate(const nn::Shape4& s, const nn::RoiWindow& roi) {
  if (!std::isfinite(roi.row_min) || !std::isfinite(roi.row_max) || !std::isfinite(roi.col_min) ||
      !std::isfinite(roi.col_max)) {
    return true;
  }
  const int r0 = std::clamp(static_cast<int>(std::floor(roi.row_min)), 0, s.h);
  const int r1 = std::clamp(static_cast<int>(std::ceil(roi.row_max)), 0, s.h);
  const int c0 = std::clamp(static_cast<int>(std::floor(roi.col_min)), 0, s.w);
  const int c1 = std::clamp(static_cast<int>(std::ceil(roi.col_max)), 0, s.w);
  return r1 <= r0 || c1 <= c0 || !(roi.row_max > roi.row_min) || !(roi.col_max > roi.col_min);
}

RoiFusion::Result RoiFusion::forward(const nn::Tensor4& map_img, const nn::Tensor4& map_bev,
                                     std::span<const std::optional<nn::RoiWindow>> rois_img,
                                     std::span<const std::optional<nn::RoiWindow>> rois_bev,
                                     int pooled) {
  if (rois_img.size() != rois_bev.size()) throw ValueError("ROI lists differ in length");
  if (map_img.shape().c != map_bev.shape().c) {
    throw ShapeError("ROI fusion maps differ in channels: " + map_img.shape().str() + " " +
                     map_bev.shape().str());
  }
  img_shape_ = map_img.shape();
  bev_shape_ = map_bev.shape();
  width_ = pooled * pooled * map_img.shape().c;
  routes_.clear();

  Result r;
  r.width = width_;
  for (std::size_t i = 0; i < rois_img.size(); ++i) {
    const bool has_img = rois_img[i] && !roi_is_degenerate(img_shape_, *rois_img[i]);
    const bool has_bev = rois_bev[i] && !roi_is_degenerate(bev_shape_, *rois_bev[i]);
    if (!has_img && !has_bev) continue;
    Route route;
    std::vector<double> img_vec, bev_vec;
    if (has_img) img_vec = nn::roi_pool(map_img, *rois_img[i], pooled, &route.img);
    if (has_bev) bev_vec = nn::roi_pool(map_bev, *rois_bev[i], pooled, &route.bev);
    route.img_weight = has_img ? (has_bev ? 0.5 : 1.0) : 0.0;
    route.bev_weight = has_bev ? (has_img ? 0.5 : 1.0) : 0.0;
    for (int k = 0; k < width_; ++k) {
      double v = 0.0;
      if (has_img) v += route.img_weight * img_vec[k];
      if (has_bev) v += route.bev_weight * bev_vec[k];
      r.features.push_back(v);
    }
    r.kept.push_back(i);
    routes_.push_back(std::move(route));
  }
  return r;
}

void RoiFusion::backward(std::span<const double> dfeatures, nn::Tensor4& dmap_img,
                         nn::Tensor4& dmap_bev) const {
  if (dfeatures.size() != routes_.size() * static_cast<std::size_t>(width_)) {
    throw ShapeError("ROI fusion gradient has the wrong length");
  }
  if (dmap_img.shape() != img_shape_) dmap_img = nn::Tensor4(img_shape_);
  if (dmap_bev.shape() != bev_shape_) dmap_bev = nn::Tensor4(bev_shape_);
  for (std::size_t r = 0; r < routes_.size(); ++r) {
    const Route& route = routes_[r];
    const double* d = dfeatures.data() + r * width_;
    for (std::size_t k = 0; k < route.img.size(); ++k) dmap_img.data()[route.img[k]] += route.img_weight * d[k];
    for (std::size_t k = 0; k < route.bev.size(); ++k) dmap_bev.data()[route.bev[k]] += route.bev_weight * d[k];
  }
}

}  // namespace mmfusion::detector
