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

#include "mmfusion/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mmfusion/error.hpp"

namespace mmfusion::image {

RgbImage read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  RgbImage img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw FormatError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encoding failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("PNG encoding failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Rect2D Letterbox::map(const Rect2D& r) const {
  return {r.u_min * scale_u + offset_u, r.v_min * scale_v + offset_v, r.u_max * scale_u + offset_u,
          r.v_max * scale_v + offset_v};
}

Letterbox letterbox_geometry(ImageSize source, int canvas_h, int canvas_w) {
  if (source.width <= 0 || source.height <= 0 || canvas_h <= 0 || canvas_w <= 0) {
    throw ValueError("letterbox: empty image or canvas");
  }
  const double s = std::min(static_cast<double>(canvas_w) / source.width,
                            static_cast<double>(canvas_h) / source.height);
  const int w = std::clamp(static_cast<int>(std::lround(source.width * s)), 1, canvas_w);
  const int h = std::clamp(static_cast<int>(std::lround(source.height * s)), 1, canvas_h);
  Letterbox lb;
  lb.scale_u = static_cast<double>(w) / source.width;
  lb.scale_v = static_cast<double>(h) / source.height;
  lb.offset_u = (canvas_w - w) / 2;
  lb.offset_v = (canvas_h - h) / 2;
  lb.width = canvas_w;
  lb.height = canvas_h;
  return lb;
}

nn::Tensor4 letterbox(const RgbImage& img, const Letterbox& g) {
  nn::Tensor4 out({1, g.height, g.width, 3});
  const int ox = static_cast<int>(g.offset_u), oy = static_cast<int>(g.offset_v);
  const int w = static_cast<int>(std::lround(img.width * g.scale_u));
  const int h = static_cast<int>(std::lround(img.height * g.scale_v));
  for (int y = 0; y < h; ++y) {
    const double sy = std::clamp((y + 0.5) / g.scale_v - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(sy), y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < w; ++x) {
      const double sx = std::clamp((x + 0.5) / g.scale_u - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(sx), x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - fy) * ((1 - fx) * img.at(x0, y0)[c] + fx * img.at(x1, y0)[c]) +
                         fy * ((1 - fx) * img.at(x0, y1)[c] + fx * img.at(x1, y1)[c]);
        out.at(0, y + oy, x + ox, c) = v / 255.0;
      }
    }
  }
  return out;
}

}  // namespace mmfusion::image
