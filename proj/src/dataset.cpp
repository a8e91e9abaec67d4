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

#include "mmfusion/dataset.hpp"

#include <algorithm>
#include <sstream>

#include "mmfusion/error.hpp"

namespace mmfusion::data {
namespace fs = std::filesystem;

KittiDataset::KittiDataset(fs::path root, std::string subset)
    : root_(std::move(root)), subset_(std::move(subset)) {}

FramePaths KittiDataset::paths(const std::string& id) const {
  const fs::path base = root_ / subset_;
  return {base / "velodyne" / (id + ".bin"), base / "image_2" / (id + ".png"),
          base / "calib" / (id + ".txt"), base / "label_2" / (id + ".txt"),
          base / "planes" / (id + ".txt")};
}

PointCloud KittiDataset::load_cloud(const std::string& id) const {
  const fs::path p = paths(id).velodyne;
  if (!fs::exists(p)) throw IoError("frame " + id + ": missing point cloud " + p.string());
  try {
    return kitti::parse_point_cloud(kitti::read_binary_file(p));
  } catch (const FormatError& e) {
    throw FormatError("frame " + id + ": " + e.what());
  }
}

std::vector<GroundTruthObject> KittiDataset::load_labels(const std::string& id) const {
  const fs::path p = paths(id).label;
  if (!fs::exists(p)) throw IoError("frame " + id + ": missing labels " + p.string());
  try {
    return kitti::parse_labels(kitti::read_text_file(p));
  } catch (const FormatError& e) {
    throw FormatError("frame " + id + ": " + e.what());
  }
}

Frame KittiDataset::load(const std::string& id, bool with_labels) const {
  const FramePaths p = paths(id);
  Frame f;
  f.id = id;
  f.cloud = load_cloud(id);
  for (const fs::path& required : {p.image, p.calib}) {
    if (!fs::exists(required)) throw IoError("frame " + id + ": missing " + required.string());
  }
  try {
    f.image = image::read_png(p.image);
    f.calib = kitti::parse_calibration(kitti::read_text_file(p.calib));
    if (fs::exists(p.plane)) f.plane = kitti::parse_ground_plane(kitti::read_text_file(p.plane));
  } catch (const FormatError& e) {
    throw FormatError("frame " + id + ": " + e.what());
  }
  if (with_labels) f.labels = load_labels(id);
  return f;
}

std::vector<std::string> KittiDataset::frame_ids() const {
  std::vector<std::string> ids;
  const fs::path dir = root_ / subset_ / "velodyne";
  if (!fs::is_directory(dir)) throw IoError("no velodyne directory under " + (root_ / subset_).string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".bin") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> read_split(const fs::path& path) {
  std::istringstream in(kitti::read_text_file(path));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string id;
    if (ls >> id) ids.push_back(id);
  }
  return ids;
}

std::string format_split(std::span<const std::string> ids) {
  std::string out;
  for (const std::string& id : ids) out += id + "\n";
  return out;
}

void write_frame(const fs::path& root, const Frame& frame, const std::string& subset) {
  const KittiDataset ds(root, subset);
  const FramePaths p = ds.paths(frame.id);
  for (const fs::path& f : {p.velodyne, p.image, p.calib, p.label, p.plane}) {
    fs::create_directories(f.parent_path());
  }
  kitti::write_binary_file(p.velodyne, kitti::serialize_point_cloud(frame.cloud));
  image::write_png(p.image, frame.image);
  kitti::write_text_file(p.calib, kitti::write_calibration(frame.calib));
  kitti::write_text_file(p.label, kitti::write_labels(frame.labels));
  kitti::write_text_file(p.plane, kitti::write_ground_plane(frame.plane));
}

}  // namespace mmfusion::data
