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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmfusion/image.hpp"
#include "mmfusion/kitti_io.hpp"
#include "mmfusion/types.hpp"

namespace mmfusion::data {

struct Frame {
  std::string id;
  PointCloud cloud;
  image::RgbImage image;
  Calibration calib;
  GroundPlane plane = kitti::kDefaultGroundPlane;
  std::vector<GroundTruthObject> labels;
};

struct FramePaths {
  std::filesystem::path velodyne, image, calib, label, plane;
};

// <root>/<subset>/{velodyne,image_2,calib,label_2,planes}/<id>.{bin,png,txt,txt,txt}
class KittiDataset {
 public:
  explicit KittiDataset(std::filesystem::path root, std::string subset = "training");

  const std::filesystem::path& root() const { return root_; }
  FramePaths paths(const std::string& id) const;

  // Missing files raise IoError naming the frame. A missing planes file falls
  // back to the default ground plane; labels are only read when requested.
  Frame load(const std::string& id, bool with_labels = true) const;
  PointCloud load_cloud(const std::string& id) const;
  std::vector<GroundTruthObject> load_labels(const std::string& id) const;

  // Ids of all point clouds present, sorted.
  std::vector<std::string> frame_ids() const;

 private:
  std::filesystem::path root_;
  std::string subset_;
};

// One frame id per line; blank lines are skipped.
std::vector<std::string> read_split(const std::filesystem::path& path);
std::string format_split(std::span<const std::string> ids);

// Writes every component of the frame in the layout read by KittiDataset.
void write_frame(const std::filesystem::path& root, const Frame& frame,
                 const std::string& subset = "training");

}  // namespace mmfusion::data
