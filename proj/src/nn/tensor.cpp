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

#include "mmfusion/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mmfusion/error.hpp"

namespace mmfusion::nn {

std::string Shape4::str() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Shape4& s) {
  return os << s.n << "x" << s.h << "x" << s.w << "x" << s.c;
}

Tensor4::Tensor4(Shape4 shape, double fill) : shape_(shape), data_(shape.size(), fill) {
  if (shape.n < 0 || shape.h < 0 || shape.w < 0 || shape.c < 0) {
    throw ShapeError("negative tensor dimension " + shape.str());
  }
}

Tensor4::Tensor4(Shape4 shape, std::vector<double> data)
    : Tensor4(shape, std::span<const double>(data)) {}

Tensor4::Tensor4(Shape4 shape, std::span<const double> data)
    : shape_(shape), data_(data.begin(), data.end()) {
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

void Tensor4::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor4& Tensor4::operator+=(const Tensor4& other) {
  if (other.shape_ != shape_) {
    throw ShapeError("tensor add: " + shape_.str() + " vs " + other.shape_.str());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor4 concat_channels(std::span<const Tensor4* const> xs) {
  if (xs.empty()) throw ShapeError("concat of zero tensors");
  Shape4 out = xs.front()->shape();
  out.c = 0;
  for (const Tensor4* x : xs) {
    const Shape4& s = x->shape();
    if (s.n != out.n || s.h != out.h || s.w != out.w) {
      throw ShapeError("concat spatial mismatch: " + xs.front()->shape().str() + " vs " + s.str());
    }
    out.c += s.c;
  }
  Tensor4 y(out);
  const std::size_t pixels = static_cast<std::size_t>(out.n) * out.h * out.w;
  double* dst = y.data();
  for (std::size_t p = 0; p < pixels; ++p) {
    for (const Tensor4* x : xs) {
      const int c = x->shape().c;
      const double* src = x->data() + p * c;
      dst = std::copy(src, src + c, dst);
    }
  }
  return y;
}

Tensor4 concat_channels(std::initializer_list<const Tensor4*> xs) {
  return concat_channels(std::span<const Tensor4* const>(xs.begin(), xs.size()));
}

std::vector<Tensor4> split_channels(const Tensor4& x, std::span<const int> channel_counts) {
  int total = 0;
  for (int c : channel_counts) total += c;
  if (total != x.shape().c) {
    throw ShapeError("split channel counts sum to " + std::to_string(total) + ", tensor has " +
                     std::to_string(x.shape().c));
  }
  std::vector<Tensor4> parts;
  parts.reserve(channel_counts.size());
  for (int c : channel_counts) {
    parts.emplace_back(Shape4{x.shape().n, x.shape().h, x.shape().w, c});
  }
  const std::size_t pixels = static_cast<std::size_t>(x.shape().n) * x.shape().h * x.shape().w;
  const double* src = x.data();
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const int c = channel_counts[k];
      std::copy(src, src + c, parts[k].data() + p * c);
      src += c;
    }
  }
  return parts;
}

// splitmix64
std::uint64_t Rng::next_u64() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  // Box-Muller; the second variate is discarded to keep the stream stateless.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) return 0;
  return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

}  // namespace mmfusion::nn
