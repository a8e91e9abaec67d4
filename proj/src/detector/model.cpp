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

#include "mmfusion/detector/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmfusion/anchor_gen.hpp"
#include "mmfusion/box_codec.hpp"
#include "mmfusion/error.hpp"
#include "mmfusion/geometry.hpp"

namespace mmfusion::detector {
namespace {

constexpr int kImageChannels = 3;

// Decoding guard: keeps exp() of the size deltas finite for untrained heads.
Box3D safe_decode(const Box3D& base, std::span<const double> deltas, codec::Mode mode) {
  std::vector<double> v(deltas.begin(), deltas.end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double limit = (i >= 3 && i < 6) ? 4.0 : 10.0;
    v[i] = std::clamp(std::isfinite(v[i]) ? v[i] : 0.0, -limit, limit);
  }
  return codec::decode(base, codec::RegressionTarget::from_values(v, mode), mode);
}

void shuffle(std::vector<std::size_t>& v, nn::Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

// Up to `batch` indices with at most `max_positive` positives, ascending.
std::vector<std::size_t> sample_balanced(std::span<const overlap::Assignment> a, int batch,
                                         int max_positive, nn::Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].label == overlap::Label::kPositive) pos.push_back(i);
    if (a[i].label == overlap::Label::kNegative) neg.push_back(i);
  }
  shuffle(pos, rng);
  shuffle(neg, rng);
  const std::size_t npos = std::min<std::size_t>(pos.size(), std::max(0, max_positive));
  const std::size_t nneg = std::min<std::size_t>(neg.size(), std::max<std::size_t>(0, batch - npos));
  std::vector<std::size_t> out(pos.begin(), pos.begin() + npos);
  out.insert(out.end(), neg.begin(), neg.begin() + nneg);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::optional<nn::RoiWindow> bev_window(const Box3D& box, const BevGridSpec& grid) {
  const auto r = geometry::box_to_bev_rect(box, grid);
  if (!r) return std::nullopt;
  return nn::RoiWindow{r->u_min, r->v_min, r->u_max, r->v_max};
}

std::optional<nn::RoiWindow> image_window(const Box3D& box, const PreparedFrame& frame) {
  const auto r = geometry::box_to_image_roi(box, frame.calib, frame.raw_image);
  if (!r) return std::nullopt;
  const Rect2D m = frame.letterbox.map(*r);
  return nn::RoiWindow{m.v_min, m.u_min, m.v_max, m.u_max};
}

PreparedFrame prepare_frame(const data::Frame& f, const DetectorConfig& cfg) {
  if (f.image.width <= 0 || f.image.height <= 0) throw ValueError("frame " + f.id + ": empty image");
  PreparedFrame p;
  p.id = f.id;
  p.calib = f.calib;
  p.raw_image = f.image.size();
  p.letterbox = image::letterbox_geometry(p.raw_image, cfg.image_height, cfg.image_width);
  p.image = image::letterbox(f.image, p.letterbox);
  p.bev = bev::encode_bev(f.cloud, cfg.grid);

  const anchors::AnchorSet all = anchors::generate_anchors(
      cfg.grid, cfg.anchor_dims, f.plane, f.calib, cfg.anchor_height, cfg.anchor_stride);
  p.anchors = anchors::filter_empty_anchors(all, p.bev).anchors;
  for (const Box3D& a : p.anchors) {
    p.anchor_bev_windows.push_back(bev_window(a, cfg.grid));
    p.anchor_image_windows.push_back(image_window(a, p));
  }
  for (const GroundTruthObject& o : f.labels) {
    if (o.class_name == "Car") p.gt_boxes.push_back(geometry::box_from_label(o, f.calib));
  }
  p.anchor_assignments = overlap::assign_targets(p.anchors, p.gt_boxes, cfg.rpn_positive_iou,
                                                 cfg.rpn_negative_iou, overlap::iou_bev_bounds);
  return p;
}

Box3D snap_to_anchor_orientation(const Box3D& b) {
  const double a = std::fmod(std::abs(b.yaw), std::numbers::pi);
  const double yaw = std::min(a, std::numbers::pi - a) <= 0.25 * std::numbers::pi ? 0.0 : 0.5 * std::numbers::pi;
  return Box3D(b.x, b.y, b.z, b.l, b.w, b.h, yaw);
}

Detector::Detector(const DetectorConfig& cfg)
    : cfg_(cfg),
      ext_img_("image", kImageChannels, cfg.base_channels),
      ext_bev_("bev", cfg.grid.n_slices + 1, cfg.base_channels),
      mlf_img_("image", cfg.base_channels),
      mlf_bev_("bev", cfg.base_channels),
      red_img_("image", cfg.base_channels),
      red_bev_("bev", cfg.base_channels),
      rpn_head_("rpn", cfg.roi_pool_size * cfg.roi_pool_size, cfg.fc_width,
                codec::RegressionTarget::size(codec::Mode::kRpn)),
      dh_head_("dh", cfg.roi_pool_size * cfg.roi_pool_size * cfg.base_channels, cfg.fc_width,
               codec::RegressionTarget::size(codec::Mode::kDetectionHead)) {}

void Detector::initialize(std::uint64_t seed) {
  nn::Rng rng(seed);
  ext_img_.initialize(rng);
  mlf_img_.initialize(rng);
  red_img_.initialize();
  ext_bev_.initialize(rng);
  mlf_bev_.initialize(rng);
  red_bev_.initialize();
  rpn_head_.initialize(rng);
  dh_head_.initialize(rng);
}

std::vector<nn::Parameter*> Detector::parameters() {
  std::vector<nn::Parameter*> out;
  auto add = [&](std::vector<nn::Parameter*> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  add(ext_img_.parameters());
  add(mlf_img_.parameters());
  add(red_img_.parameters());
  add(ext_bev_.parameters());
  add(mlf_bev_.parameters());
  add(red_bev_.parameters());
  add(rpn_head_.parameters());
  add(dh_head_.parameters());
  return out;
}

void Detector::zero_grad() {
  for (nn::Parameter* p : parameters()) p->zero_grad();
}

ShapeTrace Detector::trace_shapes() const {
  auto branch = [](const FeatureExtractor& ext, const MultiLevelFusion& mlf,
                   const ChannelReducer& red, const nn::Shape4& input) {
    std::vector<NamedShape> t = ext.trace_shapes(input);
    auto find = [&](const char* name) {
      for (const NamedShape& s : t) {
        if (s.layer == name) return s.shape;
      }
      throw ShapeError(std::string("missing layer ") + name);
    };
    const auto fusion = mlf.trace_shapes(find("Conv-5"), find("Conv-6"), find("Conv-7"));
    t.insert(t.end(), fusion.begin(), fusion.end());
    t.push_back({"Conv-10", red.output_shape(fusion.back().shape)});
    return t;
  };
  ShapeTrace trace;
  trace.image = branch(ext_img_, mlf_img_, red_img_,
                       {1, cfg_.image_height, cfg_.image_width, kImageChannels});
  trace.bev = branch(ext_bev_, mlf_bev_, red_bev_,
                     {1, cfg_.grid.rows(), cfg_.grid.cols(), cfg_.grid.n_slices + 1});
  return trace;
}

Detector::Maps Detector::forward_features(const PreparedFrame& f) {
  Maps m;
  m.fused_img = mlf_img_.forward(ext_img_.forward(f.image));
  m.reduced_img = red_img_.forward(m.fused_img);
  m.fused_bev = mlf_bev_.forward(ext_bev_.forward(f.bev.channels));
  m.reduced_bev = red_bev_.forward(m.fused_bev);
  return m;
}

void Detector::backward_features(const Maps& g) {
  nn::Tensor4 d_img = g.fused_img;
  d_img += red_img_.backward(g.reduced_img);
  ext_img_.backward(mlf_img_.backward(d_img));
  nn::Tensor4 d_bev = g.fused_bev;
  d_bev += red_bev_.backward(g.reduced_bev);
  ext_bev_.backward(mlf_bev_.backward(d_bev));
}

std::vector<Proposal> Detector::proposals_from(const PreparedFrame& f, const Maps& maps, int top_k) {
  const RoiFusion::Result fused =
      rpn_fusion_.forward(maps.reduced_img, maps.reduced_bev, f.anchor_image_windows,
                          f.anchor_bev_windows, cfg_.roi_pool_size);
  const int rows = static_cast<int>(fused.kept.size());
  const HeadNetwork::Output out = rpn_head_.forward(fused.features, rows);
  const std::vector<double> scores = objectness(out.logits);
  const int r = rpn_head_.regression_size();
  std::vector<Box3D> boxes;
  boxes.reserve(rows);
  for (int k = 0; k < rows; ++k) {
    boxes.push_back(safe_decode(f.anchors[fused.kept[k]],
                                std::span<const double>(out.deltas).subspan(k * r, r),
                                codec::Mode::kRpn));
  }
  const auto keep = overlap::nms_bev_bounds(boxes, scores, cfg_.rpn_nms_iou,
                                            static_cast<std::size_t>(std::max(0, top_k)));
  std::vector<Proposal> props;
  for (std::size_t i : keep) props.push_back({boxes[i], scores[i]});
  return props;
}

std::vector<double> Detector::dh_features(const PreparedFrame& f, const Maps& maps,
                                          std::span<const Box3D> boxes, RoiFusion& fusion,
                                          std::vector<std::size_t>& kept) {
  std::vector<std::optional<nn::RoiWindow>> img, bev;
  for (const Box3D& b : boxes) {
    img.push_back(image_window(b, f));
    bev.push_back(bev_window(b, cfg_.grid));
  }
  RoiFusion::Result r =
      fusion.forward(maps.fused_img, maps.fused_bev, img, bev, cfg_.roi_pool_size);
  kept = std::move(r.kept);
  return std::move(r.features);
}

std::vector<Proposal> Detector::propose(const PreparedFrame& f, int top_k) {
  const Maps maps = forward_features(f);
  return proposals_from(f, maps, top_k);
}

std::vector<Detection> Detector::detect(const PreparedFrame& f) {
  const Maps maps = forward_features(f);
  const std::vector<Proposal> props = proposals_from(f, maps, cfg_.proposals_test);
  std::vector<Box3D> boxes;
  for (const Proposal& p : props) boxes.push_back(p.box);
  std::vector<std::size_t> kept;
  const std::vector<double> feats = dh_features(f, maps, boxes, dh_fusion_, kept);
  const HeadNetwork::Output out = dh_head_.forward(feats, static_cast<int>(kept.size()));
  const std::vector<double> scores = objectness(out.logits);
  const int r = dh_head_.regression_size();
  std::vector<Box3D> refined;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    refined.push_back(safe_decode(boxes[kept[k]],
                                  std::span<const double>(out.deltas).subspan(k * r, r),
                                  codec::Mode::kDetectionHead));
  }
  std::vector<Detection> dets;
  for (std::size_t i : overlap::nms(refined, scores, cfg_.dh_nms_iou, overlap::iou_rotated_bev)) {
    dets.push_back({refined[i], scores[i], "Car"});
  }
  return dets;
}

StepResult Detector::train_step(const PreparedFrame& f, const StepOptions& opt) {
  StepResult res;
  nn::Rng rng(opt.sample_seed);
  const Maps maps = forward_features(f);

  // Proposal set for the detection head; no gradient flows through it.
  if (opt.proposals) {
    res.proposals = *opt.proposals;
  } else {
    std::vector<Box3D> candidates;
    for (const Proposal& p : proposals_from(f, maps, cfg_.proposals_train)) candidates.push_back(p.box);
    if (cfg_.gt_proposals) {
      for (const Box3D& g : f.gt_boxes) candidates.push_back(snap_to_anchor_orientation(g));
    }
    const auto assign = overlap::assign_targets(candidates, f.gt_boxes, cfg_.dh_positive_iou,
                                                cfg_.dh_positive_iou, overlap::iou_rotated_bev);
    for (std::size_t i : sample_balanced(assign, cfg_.dh_batch, cfg_.dh_batch / 2, rng)) {
      res.proposals.push_back(candidates[i]);
    }
  }

  // RPN minibatch.
  res.rpn_sample = opt.rpn_sample
                       ? *opt.rpn_sample
                       : sample_balanced(f.anchor_assignments, cfg_.rpn_batch, cfg_.rpn_batch / 2, rng);
  std::vector<std::optional<nn::RoiWindow>> img_w, bev_w;
  for (std::size_t i : res.rpn_sample) {
    if (i >= f.anchors.size()) throw ValueError("RPN sample index out of range");
    img_w.push_back(f.anchor_image_windows[i]);
    bev_w.push_back(f.anchor_bev_windows[i]);
  }
  const RoiFusion::Result rpn_in = rpn_fusion_.forward(maps.reduced_img, maps.reduced_bev, img_w,
                                                       bev_w, cfg_.roi_pool_size);
  const int rpn_rows = static_cast<int>(rpn_in.kept.size());
  const int rr = rpn_head_.regression_size();
  std::vector<int> rpn_labels(rpn_rows);
  std::vector<double> rpn_targets(static_cast<std::size_t>(rpn_rows) * rr, 0.0);
  for (int k = 0; k < rpn_rows; ++k) {
    const std::size_t a = res.rpn_sample[rpn_in.kept[k]];
    const overlap::Assignment& asg = f.anchor_assignments[a];
    rpn_labels[k] = asg.label == overlap::Label::kPositive   ? 1
                    : asg.label == overlap::Label::kNegative ? 0
                                                             : -1;
    if (rpn_labels[k] == 1) {
      const auto t = codec::encode(f.anchors[a], f.gt_boxes[*asg.matched_gt], codec::Mode::kRpn).values();
      std::copy(t.begin(), t.begin() + rr, rpn_targets.begin() + k * rr);
    }
  }
  const HeadNetwork::Output rpn_out = rpn_head_.forward(rpn_in.features, rpn_rows);
  const HeadLoss rpn_loss = head_loss(rpn_out.logits, rpn_out.deltas, rpn_labels, rpn_targets, rr);

  // Detection head.
  std::vector<std::size_t> dh_kept;
  const std::vector<double> dh_in = dh_features(f, maps, res.proposals, dh_fusion_, dh_kept);
  const int dh_rows = static_cast<int>(dh_kept.size());
  const int dr = dh_head_.regression_size();
  std::vector<Box3D> dh_boxes;
  for (std::size_t i : dh_kept) dh_boxes.push_back(res.proposals[i]);
  const auto dh_assign = overlap::assign_targets(dh_boxes, f.gt_boxes, cfg_.dh_positive_iou,
                                                 cfg_.dh_positive_iou, overlap::iou_rotated_bev);
  std::vector<int> dh_labels(dh_rows);
  std::vector<double> dh_targets(static_cast<std::size_t>(dh_rows) * dr, 0.0);
  for (int k = 0; k < dh_rows; ++k) {
    dh_labels[k] = dh_assign[k].label == overlap::Label::kPositive ? 1 : 0;
    if (dh_labels[k] == 1) {
      const auto t = codec::encode(dh_boxes[k], f.gt_boxes[*dh_assign[k].matched_gt],
                                   codec::Mode::kDetectionHead)
                         .values();
      std::copy(t.begin(), t.begin() + dr, dh_targets.begin() + k * dr);
    }
  }
  const HeadNetwork::Output dh_out = dh_head_.forward(dh_in, dh_rows);
  const HeadLoss dh_loss = head_loss(dh_out.logits, dh_out.deltas, dh_labels, dh_targets, dr);

  res.loss = compute_losses(rpn_loss, dh_loss);
  res.rpn_positives = rpn_loss.positives;
  res.dh_positives = dh_loss.positives;

  if (opt.backward) {
    Maps grads;
    rpn_fusion_.backward(rpn_head_.backward(rpn_loss.dlogits, rpn_loss.ddeltas), grads.reduced_img,
                         grads.reduced_bev);
    dh_fusion_.backward(dh_head_.backward(dh_loss.dlogits, dh_loss.ddeltas), grads.fused_img,
                        grads.fused_bev);
    backward_features(grads);
  }
  return res;
}

}  // namespace mmfusion::detector
