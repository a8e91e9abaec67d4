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

#include "mmfusion/synthetic.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mmfusion/error.hpp"
#include "mmfusion/geometry.hpp"
#include "mmfusion/nn/tensor.hpp"
#include "mmfusion/overlap_nms.hpp"

namespace mmfusion::synth {
namespace {

using Vec3 = Eigen::Vector3d;

struct Car {
  Box3D box;
  std::array<std::uint8_t, 3> colour;
};

// Sample uniformly on the parallelogram origin + s*a + t*b.
void sample_face(const Vec3& origin, const Vec3& a, const Vec3& b, double spacing, nn::Rng& rng,
                 PointCloud& cloud) {
  const double area = a.cross(b).norm();
  const int n = static_cast<int>(std::lround(area / (spacing * spacing)));
  for (int i = 0; i < n; ++i) {
    const Vec3 p = origin + rng.uniform() * a + rng.uniform() * b;
    cloud.points.push_back({static_cast<float>(p.x()), static_cast<float>(p.y()),
                            static_cast<float>(p.z()), static_cast<float>(rng.uniform(0.1, 0.9))});
  }
}

// Side faces that face the sensor at the origin, plus the roof.
void sample_car(const Box3D& box, double spacing, nn::Rng& rng, PointCloud& cloud) {
  const auto c = geometry::box_to_corners(box);
  const Vec3 up(0, 0, box.h);
  for (int k = 0; k < 4; ++k) {
    const Vec3& p0 = c[k];
    const Vec3& p1 = c[(k + 1) % 4];
    const Vec3 edge = p1 - p0;
    const Vec3 outward(edge.y(), -edge.x(), 0.0);  // corners run counter-clockwise
    const Vec3 mid = 0.5 * (p0 + p1);
    if (outward.dot(-mid) > 0.0) sample_face(p0, edge, up, spacing, rng, cloud);
  }
  sample_face(c[4], c[5] - c[4], c[7] - c[4], spacing, rng, cloud);
}

struct ProjectedBox {
  std::array<Eigen::Vector2d, 8> px;
  bool valid = true;
};

ProjectedBox project_box(const Box3D& box, const Calibration& calib) {
  ProjectedBox out;
  const auto c = geometry::box_to_corners(box);
  for (int k = 0; k < 8; ++k) {
    const geometry::ImagePoint p = geometry::project_to_image(c[k], calib);
    if (p.behind_camera) out.valid = false;
    out.px[k] = {p.u, p.v};
  }
  return out;
}

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 0 ? k - 1 : 0);
  return hull;
}

void fill_polygon(image::RgbImage& img, const std::vector<Eigen::Vector2d>& poly,
                  const std::array<std::uint8_t, 3>& colour) {
  if (poly.size() < 3) return;
  double u0 = poly[0].x(), u1 = u0, v0 = poly[0].y(), v1 = v0;
  for (const auto& p : poly) {
    u0 = std::min(u0, p.x());
    u1 = std::max(u1, p.x());
    v0 = std::min(v0, p.y());
    v1 = std::max(v1, p.y());
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(u0)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(u1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(v0)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(v1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Eigen::Vector2d q(x + 0.5, y + 0.5);
      bool inside = true;
      for (std::size_t i = 0; i < poly.size() && inside; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % poly.size()];
        inside = (b - a).x() * (q - a).y() - (b - a).y() * (q - a).x() >= 0;
      }
      if (inside) std::copy(colour.begin(), colour.end(), img.at(x, y));
    }
  }
}

image::RgbImage render(const std::vector<Car>& cars, const Calibration& calib, ImageSize size,
                       nn::Rng& rng) {
  image::RgbImage img(size.width, size.height);
  // Horizon: projection of a far point on the ground.
  const double horizon =
      geometry::project_to_image({1000.0, 0.0, -kSensorHeight}, calib).v;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::uint8_t* px = img.at(x, y);
      const int noise = static_cast<int>(rng.below(9)) - 4;
      if (y < horizon) {
        const int t = static_cast<int>(60.0 * y / std::max(1.0, horizon));
        px[0] = static_cast<std::uint8_t>(std::clamp(140 + t + noise, 0, 255));
        px[1] = static_cast<std::uint8_t>(std::clamp(170 + t + noise, 0, 255));
        px[2] = static_cast<std::uint8_t>(std::clamp(230 + noise, 0, 255));
      } else {
        const int g = std::clamp(95 + noise, 0, 255);
        px[0] = px[1] = px[2] = static_cast<std::uint8_t>(g);
      }
    }
  }
  std::vector<const Car*> order;
  for (const Car& c : cars) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const Car* a, const Car* b) {
    return std::hypot(a->box.x, a->box.y) > std::hypot(b->box.x, b->box.y);
  });
  for (const Car* car : order) {
    const ProjectedBox pb = project_box(car->box, calib);
    if (!pb.valid) continue;
    // Dark body, then a lighter roof.
    std::array<std::uint8_t, 3> dark;
    for (int k = 0; k < 3; ++k) dark[k] = static_cast<std::uint8_t>(car->colour[k] * 0.6);
    fill_polygon(img, convex_hull({pb.px.begin(), pb.px.end()}), dark);
    fill_polygon(img, convex_hull({pb.px.begin() + 4, pb.px.end()}), car->colour);
  }
  return img;
}

}  // namespace

Calibration synthetic_calibration() {
  Calibration c;
  c.p2 << 721.5377, 0.0, 609.5593, 44.85728,  //
      0.0, 721.5377, 172.854, 0.2163791,       //
      0.0, 0.0, 1.0, 0.002745884;
  c.r0_rect = Eigen::Matrix3d::Identity();
  c.tr_velo_to_cam << 0.0, -1.0, 0.0, 0.0,  //
      0.0, 0.0, -1.0, -0.08,                //
      1.0, 0.0, 0.0, -0.27;
  return c;
}

GroundPlane synthetic_ground_plane() { return {0.0, -1.0, 0.0, kSensorHeight - 0.08}; }

data::Frame make_frame(std::uint64_t seed, const SceneOptions& opt, const std::string& id) {
  if (opt.min_cars < 0 || opt.max_cars < opt.min_cars) throw ValueError("bad car count range");
  nn::Rng rng(seed);
  data::Frame f;
  f.id = id;
  f.calib = synthetic_calibration();
  f.plane = synthetic_ground_plane();

  const int want = opt.min_cars + static_cast<int>(rng.below(opt.max_cars - opt.min_cars + 1));
  std::vector<Car> cars;
  for (int attempt = 0; attempt < 200 && static_cast<int>(cars.size()) < want; ++attempt) {
    const double x = rng.uniform(opt.x_min, opt.x_max);
    const double y_lim = std::min(opt.max_abs_y, 0.6 * x);
    const double y = rng.uniform(-y_lim, y_lim);
    const double l = std::clamp(3.9 + 0.25 * rng.normal(), 3.3, 4.6);
    const double w = std::clamp(1.62 + 0.08 * rng.normal(), 1.45, 1.85);
    const double h = std::clamp(1.52 + 0.08 * rng.normal(), 1.35, 1.75);
    const double base = rng.uniform() < 0.5 ? 0.0 : 0.5 * std::numbers::pi;
    const double yaw = base + rng.uniform(-opt.yaw_jitter, opt.yaw_jitter);
    const Box3D box(x, y, -kSensorHeight + 0.5 * h, l, w, h, yaw);

    // Keep the whole box inside the image and away from other cars.
    const ProjectedBox pb = project_box(box, f.calib);
    bool ok = pb.valid;
    for (const auto& p : pb.px) {
      ok = ok && p.x() >= 1 && p.x() <= opt.image.width - 1 && p.y() >= 1 &&
           p.y() <= opt.image.height - 1;
    }
    const Box3D grown(x, y, box.z, l + 1.0, w + 1.0, h, yaw);
    for (const Car& other : cars) {
      const Box3D other_grown(other.box.x, other.box.y, other.box.z, other.box.l + 1.0,
                              other.box.w + 1.0, other.box.h, other.box.yaw);
      ok = ok && overlap::iou_rotated_bev(grown, other_grown) == 0.0;
    }
    if (!ok) continue;
    Car car{box, {}};
    for (auto& ch : car.colour) ch = static_cast<std::uint8_t>(60 + rng.below(180));
    cars.push_back(car);
  }

  for (const Car& car : cars) sample_car(car.box, opt.point_spacing, rng, f.cloud);
  for (int k = 0; k < opt.clutter_clusters; ++k) {
    const double x = rng.uniform(opt.x_min, opt.x_max);
    const double y = rng.uniform(-opt.max_abs_y, opt.max_abs_y);
    const double top = rng.uniform(0.5, 2.5);
    const int n = 15 + static_cast<int>(rng.below(15));
    for (int i = 0; i < n; ++i) {
      f.cloud.points.push_back({static_cast<float>(x + 0.1 * rng.normal()),
                                static_cast<float>(y + 0.1 * rng.normal()),
                                static_cast<float>(-kSensorHeight + top * rng.uniform()),
                                static_cast<float>(rng.uniform(0.1, 0.9))});
    }
  }

  f.image = render(cars, f.calib, opt.image, rng);
  for (const Car& car : cars) {
    const geometry::CameraPose pose = geometry::camera_pose_from_box(car.box, f.calib);
    GroundTruthObject o;
    o.class_name = "Car";
    o.h = car.box.h;
    o.w = car.box.w;
    o.l = car.box.l;
    o.x = pose.x;
    o.y = pose.y;
    o.z = pose.z;
    o.rotation_y = pose.rotation_y;
    o.alpha = normalize_angle(pose.rotation_y - std::atan2(pose.x, pose.z));
    if (const auto roi = geometry::box_to_image_roi(car.box, f.calib, opt.image)) {
      o.left = roi->u_min;
      o.top = roi->v_min;
      o.right = roi->u_max;
      o.bottom = roi->v_max;
    }
    f.labels.push_back(o);
  }
  return f;
}

std::vector<data::Frame> make_frames(int count, std::uint64_t seed, const SceneOptions& options) {
  std::vector<data::Frame> frames;
  nn::Rng seeds(seed);
  for (int i = 0; i < count; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "%06d", i);
    frames.push_back(make_frame(seeds.next_u64(), options, id));
  }
  return frames;
}

}  // namespace mmfusion::synth
