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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mmfusion/nn/tensor.hpp"
#include "mmfusion/types.hpp"

namespace mmfusion::image {

// 8-bit interleaved RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}
  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  ImageSize size() const { return {width, height}; }
};

// Decodes 8-bit PNGs of any colour type into RGB. Throws IoError / FormatError.
RgbImage read_png(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const RgbImage& img);
void write_png(const std::filesystem::path& path, const RgbImage& img);

// Placement of a resized image inside a fixed-size canvas.
struct Letterbox {
  double scale_u = 1, scale_v = 1;
  double offset_u = 0, offset_v = 0;
  int width = 0, height = 0;  // canvas

  // Maps a rectangle from source pixels to canvas pixels.
  Rect2D map(const Rect2D& r) const;
};

Letterbox letterbox_geometry(ImageSize source, int canvas_h, int canvas_w);

// Aspect-preserving bilinear resize into a zero-padded, centred canvas.
// Values are scaled to [0, 1]; result shape (1, canvas_h, canvas_w, 3).
nn::Tensor4 letterbox(const RgbImage& img, const Letterbox& geometry);

}  // namespace mmfusion::image
