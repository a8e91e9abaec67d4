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

#include "mmfusion/kitti_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mmfusion/error.hpp"
#include "mmfusion/geometry.hpp"

namespace mmfusion::kitti {
namespace {

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream ss{std::string(line)};
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& tok, const std::string& context) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw FormatError(context + ": '" + tok + "' is not a number");
  }
  if (used != tok.size()) throw FormatError(context + ": '" + tok + "' is not a number");
  return v;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

void put_f32(std::vector<std::byte>& out, float v) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xFF));
}

float get_f32(const std::byte* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw ValueError(std::string("detection field ") + field + " is not finite");
}

}  // namespace

PointCloud parse_point_cloud(std::span<const std::byte> raw) {
  if (raw.size() % 16 != 0) {
    throw FormatError("point cloud byte length " + std::to_string(raw.size()) +
                      " is not a multiple of 16");
  }
  PointCloud cloud;
  cloud.points.reserve(raw.size() / 16);
  for (std::size_t i = 0; i < raw.size() / 16; ++i) {
    const std::byte* rec = raw.data() + i * 16;
    LidarPoint p{get_f32(rec), get_f32(rec + 4), get_f32(rec + 8), get_f32(rec + 12)};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.reflectance)) {
      throw RecordError(i, "non-finite value");
    }
    if (p.reflectance < 0.0f || p.reflectance > 1.0f) {
      throw RecordError(i, "reflectance outside [0, 1]");
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

std::vector<std::byte> serialize_point_cloud(const PointCloud& cloud) {
  std::vector<std::byte> out;
  out.reserve(cloud.size() * 16);
  for (const LidarPoint& p : cloud.points) {
    put_f32(out, p.x);
    put_f32(out, p.y);
    put_f32(out, p.z);
    put_f32(out, p.reflectance);
  }
  return out;
}

Calibration parse_calibration(std::string_view text) {
  std::map<std::string, std::vector<double>> entries;
  for (std::string_view line : lines_of(text)) {
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    std::string key(line.substr(0, colon));
    std::vector<double> values;
    for (const std::string& tok : split_ws(line.substr(colon + 1))) {
      values.push_back(to_double(tok, "calibration key " + key));
    }
    entries[key] = std::move(values);
  }
  auto fetch = [&](const std::string& key, std::size_t count) {
    auto it = entries.find(key);
    if (it == entries.end()) throw FormatError("calibration: missing key " + key);
    if (it->second.size() != count) {
      throw FormatError("calibration: key " + key + " has " + std::to_string(it->second.size()) +
                        " values, expected " + std::to_string(count));
    }
    for (double v : it->second) {
      if (!std::isfinite(v)) throw FormatError("calibration: key " + key + " has a non-finite value");
    }
    return it->second;
  };

  Calibration calib;
  const auto p2 = fetch("P2", 12);
  const auto r0 = fetch("R0_rect", 9);
  const auto tr = fetch("Tr_velo_to_cam", 12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      calib.p2(r, c) = p2[r * 4 + c];
      calib.tr_velo_to_cam(r, c) = tr[r * 4 + c];
    }
    for (int c = 0; c < 3; ++c) calib.r0_rect(r, c) = r0[r * 3 + c];
  }
  const double ortho = (calib.r0_rect * calib.r0_rect.transpose() - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > 1e-3) throw FormatError("calibration: R0_rect is not orthonormal");
  return calib;
}

std::string write_calibration(const Calibration& calib) {
  std::ostringstream os;
  os.precision(12);
  auto row34 = [&](const char* key, const Eigen::Matrix<double, 3, 4>& m) {
    os << key << ":";
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) os << " " << m(r, c);
    os << "\n";
  };
  row34("P0", calib.p2);
  row34("P1", calib.p2);
  row34("P2", calib.p2);
  row34("P3", calib.p2);
  os << "R0_rect:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) os << " " << calib.r0_rect(r, c);
  os << "\n";
  row34("Tr_velo_to_cam", calib.tr_velo_to_cam);
  return os.str();
}

std::vector<GroundTruthObject> parse_labels(std::string_view text) {
  std::vector<GroundTruthObject> objects;
  const auto lines = lines_of(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto f = split_ws(lines[n]);
    if (f.empty()) continue;
    const std::string where = "label line " + std::to_string(n + 1);
    if (f.size() != 15 && f.size() != 16) {
      throw FormatError(where + ": expected 15 fields, found " + std::to_string(f.size()));
    }
    GroundTruthObject o;
    o.class_name = f[0];
    o.truncation = to_double(f[1], where);
    const double occ = to_double(f[2], where);
    if (occ != std::floor(occ) || occ < -1 || occ > 3) {
      throw FormatError(where + ": occlusion must be an integer level");
    }
    o.occlusion = static_cast<int>(occ);
    o.alpha = to_double(f[3], where);
    o.left = to_double(f[4], where);
    o.top = to_double(f[5], where);
    o.right = to_double(f[6], where);
    o.bottom = to_double(f[7], where);
    o.h = to_double(f[8], where);
    o.w = to_double(f[9], where);
    o.l = to_double(f[10], where);
    o.x = to_double(f[11], where);
    o.y = to_double(f[12], where);
    o.z = to_double(f[13], where);
    o.rotation_y = to_double(f[14], where);
    if (f.size() == 16) o.score = to_double(f[15], where);
    if (o.class_name != "DontCare" && !(o.h > 0 && o.w > 0 && o.l > 0)) {
      throw FormatError(where + ": object dimensions must be positive");
    }
    objects.push_back(std::move(o));
  }
  return objects;
}

std::string write_labels(std::span<const GroundTruthObject> objects) {
  std::ostringstream os;
  for (const GroundTruthObject& o : objects) {
    os << o.class_name << " " << fmt6(o.truncation) << " " << o.occlusion << " " << fmt6(o.alpha)
       << " " << fmt6(o.left) << " " << fmt6(o.top) << " " << fmt6(o.right) << " "
       << fmt6(o.bottom) << " " << fmt6(o.h) << " " << fmt6(o.w) << " " << fmt6(o.l) << " "
       << fmt6(o.x) << " " << fmt6(o.y) << " " << fmt6(o.z) << " " << fmt6(o.rotation_y);
    if (o.score) os << " " << fmt6(*o.score);
    os << "\n";
  }
  return os.str();
}

GroundTruthObject detection_to_object(const Detection& d, const Calibration& calib, ImageSize image) {
  const Box3D& b = d.box;
  for (double v : {b.x, b.y, b.z, b.l, b.w, b.h, b.yaw}) require_finite(v, "box");
  require_finite(d.score, "score");
  const geometry::CameraPose pose = geometry::camera_pose_from_box(b, calib);
  GroundTruthObject o;
  o.class_name = d.class_name;
  o.truncation = -1;
  o.occlusion = -1;
  o.alpha = normalize_angle(pose.rotation_y - std::atan2(pose.x, pose.z));
  if (auto roi = geometry::box_to_image_roi(b, calib, image)) {
    o.left = roi->u_min;
    o.top = roi->v_min;
    o.right = roi->u_max;
    o.bottom = roi->v_max;
  }
  o.h = b.h;
  o.w = b.w;
  o.l = b.l;
  o.x = pose.x;
  o.y = pose.y;
  o.z = pose.z;
  o.rotation_y = pose.rotation_y;
  o.score = d.score;
  return o;
}

std::string write_detections(std::span<const Detection> detections, const Calibration& calib,
                             ImageSize image) {
  std::ostringstream os;
  for (const Detection& d : detections) {
    const GroundTruthObject o = detection_to_object(d, calib, image);
    os << o.class_name << " -1 -1 " << fmt6(o.alpha) << " " << fmt6(o.left) << " " << fmt6(o.top)
       << " " << fmt6(o.right) << " " << fmt6(o.bottom) << " " << fmt6(o.h) << " " << fmt6(o.w)
       << " " << fmt6(o.l) << " " << fmt6(o.x) << " " << fmt6(o.y) << " " << fmt6(o.z) << " "
       << fmt6(o.rotation_y) << " " << fmt6(*o.score) << "\n";
  }
  return os.str();
}

GroundPlane normalize_plane(const GroundPlane& p) {
  const double n = std::sqrt(p.a * p.a + p.b * p.b + p.c * p.c);
  if (!(n > 1e-12) || !std::isfinite(n) || !std::isfinite(p.d)) {
    throw FormatError("ground plane has a degenerate normal");
  }
  const double s = (p.b > 0 ? -1.0 : 1.0) / n;
  return {p.a * s, p.b * s, p.c * s, p.d * s};
}

GroundPlane parse_ground_plane(std::string_view text) {
  const auto lines = lines_of(text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    const auto toks = split_ws(*it);
    if (toks.empty()) continue;
    if (toks.size() < 4) {
      throw FormatError("ground plane: expected 4 coefficients, found " +
                        std::to_string(toks.size()));
    }
    const std::size_t k = toks.size() - 4;
    return normalize_plane({to_double(toks[k], "ground plane"), to_double(toks[k + 1], "ground plane"),
                            to_double(toks[k + 2], "ground plane"),
                            to_double(toks[k + 3], "ground plane")});
  }
  throw FormatError("ground plane: no coefficients");
}

std::string write_ground_plane(const GroundPlane& p) {
  std::ostringstream os;
  os.precision(12);
  os << "# Plane\nWidth 4\nHeight 1\n" << p.a << " " << p.b << " " << p.c << " " << p.d << "\n";
  return os.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::byte> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("short read from " + path.string());
  return bytes;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace mmfusion::kitti
