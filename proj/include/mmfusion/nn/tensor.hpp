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

#include <cstddef>
#include <cstdint>
#include <new>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mmfusion::nn {

// Numeric storage starts on a 64-byte boundary. Vectorised reductions peel a
// prefix that depends on the start address, so without this the rounding of a
// sum could change from one allocation to the next.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const {
    return true;
  }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

// Batch, rows, columns, channels. Storage is row-major with channels last.
struct Shape4 {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * h * w * c;
  }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

std::ostream& operator<<(std::ostream& os, const Shape4& s);

class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0);
  Tensor4(Shape4 shape, std::vector<double> data);
  Tensor4(Shape4 shape, std::span<const double> data);

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int n, int h, int w, int c) const {
    return ((static_cast<std::size_t>(n) * shape_.h + h) * shape_.w + w) * shape_.c + c;
  }
  double& at(int n, int h, int w, int c) { return data_[index(n, h, w, c)]; }
  double at(int n, int h, int w, int c) const { return data_[index(n, h, w, c)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);
  Tensor4& operator+=(const Tensor4& other);

 private:
  Shape4 shape_;
  Buffer data_;
};

// Concatenate along channels; spatial dims must agree.
Tensor4 concat_channels(std::span<const Tensor4* const> xs);
Tensor4 concat_channels(std::initializer_list<const Tensor4*> xs);

// Inverse of concat_channels: slices the channel axis into consecutive groups.
std::vector<Tensor4> split_channels(const Tensor4& x, std::span<const int> channel_counts);

// Deterministic generator shared by initializers, samplers and tests.
// Doubles are produced from the top 53 bits so streams are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t below(std::size_t n);  // [0, n)

 private:
  std::uint64_t state_;
};

}  // namespace mmfusion::nn
