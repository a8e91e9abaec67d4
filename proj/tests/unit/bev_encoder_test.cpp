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

#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>

#include "mmfusion/bev_encoder.hpp"
#include "oracles.hpp"

namespace {

using namespace mmfusion;

BevGridSpec small_grid() {
  BevGridSpec g;
  g.x_min = 0;
  g.x_max = 10;
  g.y_min = -5;
  g.y_max = 5;
  g.z_min = -2.5;
  g.z_max = 0.5;
  g.resolution = 0.25;
  g.n_slices = 5;
  return g;
}

PointCloud random_cloud(int n, std::uint64_t seed, const BevGridSpec& g, double margin = 0.5) {
  nn::Rng rng(seed);
  PointCloud pc;
  for (int i = 0; i < n; ++i) {
    pc.points.push_back({static_cast<float>(rng.uniform(g.x_min - margin, g.x_max + margin)),
                         static_cast<float>(rng.uniform(g.y_min - margin, g.y_max + margin)),
                         static_cast<float>(rng.uniform(g.z_min - margin, g.z_max + margin)),
                         static_cast<float>(rng.uniform())});
  }
  return pc;
}

bool bit_equal(const nn::Tensor4& a, const nn::Tensor4& b) {
  return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

TEST(CellDensity, ClosedFormValues) {
  EXPECT_EQ(bev::cell_density(0), 0.0);
  EXPECT_NEAR(bev::cell_density(7), 0.5, 1e-12);
  EXPECT_NEAR(bev::cell_density(63), 1.0, 1e-12);
  EXPECT_EQ(bev::cell_density(64), 1.0);
  EXPECT_EQ(bev::cell_density(100), 1.0);
  EXPECT_EQ(bev::cell_density(1000000), 1.0);
}

TEST(CellDensity, MonotoneInCount) {
  for (std::size_t n = 0; n < 200; ++n) EXPECT_LE(bev::cell_density(n), bev::cell_density(n + 1));
}

TEST(EncodeBev, EmptyCloudFullGridIsZero) {
  const auto maps = bev::encode_bev({}, BevGridSpec::full_scale());
  EXPECT_EQ(maps.channels.shape(), (nn::Shape4{1, 704, 800, 6}));
  EXPECT_TRUE(std::all_of(maps.channels.values().begin(), maps.channels.values().end(),
                          [](double v) { return v == 0.0; }));
}

TEST(EncodeBev, PointJustBelowSliceTop) {
  const BevGridSpec g = BevGridSpec::full_scale();
  const double eps = 1e-3;
  PointCloud pc;
  pc.points.push_back({10.05f, 0.05f, static_cast<float>(g.z_min + g.slice_height() - eps), 1.0f});
  const auto maps = bev::encode_bev(pc, g);
  const int row = 100, col = 400;
  const double z = static_cast<double>(pc.points[0].z);
  EXPECT_NEAR(maps.channels.at(0, row, col, 0), (z - g.z_min) / g.slice_height(), 1e-12);
  EXPECT_NEAR(maps.channels.at(0, row, col, 0), 1.0 - eps / g.slice_height(), 1e-6);
  EXPECT_NEAR(maps.density(row, col), 1.0 / 6.0, 1e-12);
  for (int s = 1; s < 5; ++s) EXPECT_EQ(maps.channels.at(0, row, col, s), 0.0);
}

TEST(EncodeBev, MatchesPerCellOracleExactly) {
  const BevGridSpec g = small_grid();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const PointCloud pc = random_cloud(1000, seed, g);
    EXPECT_TRUE(bit_equal(bev::encode_bev(pc, g).channels, oracle::bev_maps(pc, g)));
  }
}

TEST(EncodeBev, ValuesInUnitRangeAndDensityMarksOccupancy) {
  const BevGridSpec g = small_grid();
  const auto maps = bev::encode_bev(random_cloud(3000, 4, g), g);
  for (double v : maps.channels.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j)
      if (maps.density(i, j) == 0.0)
        for (int s = 0; s < 5; ++s) EXPECT_EQ(maps.channels.at(0, i, j, s), 0.0);
}

TEST(EncodeBev, PermutationInvariant) {
  const BevGridSpec g = small_grid();
  PointCloud pc = random_cloud(2000, 5, g);
  const auto ref = bev::encode_bev(pc, g);
  nn::Rng rng(55);
  for (std::size_t i = pc.points.size() - 1; i > 0; --i) std::swap(pc.points[i], pc.points[rng.below(i + 1)]);
  EXPECT_TRUE(bit_equal(bev::encode_bev(pc, g).channels, ref.channels));
}

TEST(EncodeBev, AddingAPointNeverLowersItsCell) {
  const BevGridSpec g = small_grid();
  PointCloud pc = random_cloud(500, 6, g, 0.0);
  nn::Rng rng(66);
  auto before = bev::encode_bev(pc, g);
  for (int k = 0; k < 50; ++k) {
    pc.points.push_back({static_cast<float>(rng.uniform(0, 10)), static_cast<float>(rng.uniform(-5, 5)),
                         static_cast<float>(rng.uniform(-2.5, 0.5)), 0.5f});
    const auto after = bev::encode_bev(pc, g);
    for (std::size_t i = 0; i < after.channels.size(); ++i) {
      ASSERT_GE(after.channels.data()[i], before.channels.data()[i]);
    }
    before = after;
  }
}

TEST(EncodeBev, TranslationByWholeCellsShiftsMaps) {
  // Dyadic resolution and coordinates keep every shift exact in floating point.
  const BevGridSpec g = small_grid();
  nn::Rng rng(7);
  PointCloud pc;
  for (int i = 0; i < 800; ++i) {
    pc.points.push_back({static_cast<float>(std::floor(rng.uniform(0, 10) * 1024) / 1024),
                         static_cast<float>(std::floor(rng.uniform(-5, 5) * 1024) / 1024),
                         static_cast<float>(std::floor(rng.uniform(-2.5, 0.5) * 1024) / 1024), 0.f});
  }
  const int k = 3;
  PointCloud shifted = pc;
  for (auto& p : shifted.points) p.x += static_cast<float>(k * g.resolution);
  const auto a = bev::encode_bev(pc, g), b = bev::encode_bev(shifted, g);
  for (int i = 0; i + k < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j)
      for (int c = 0; c < 6; ++c) ASSERT_EQ(b.channels.at(0, i + k, j, c), a.channels.at(0, i, j, c));
}

TEST(EncodeBev, ShapeFollowsGrid) {
  EXPECT_EQ(bev::encode_bev({}, BevGridSpec::desk(4)).channels.shape(), (nn::Shape4{1, 176, 200, 6}));
  EXPECT_EQ(bev::encode_bev({}, BevGridSpec::desk(8)).channels.shape(), (nn::Shape4{1, 88, 104, 6}));
}

TEST(SerializeBev, HeaderAndSize) {
  const BevGridSpec g = small_grid();
  const auto bytes = bev::serialize_bev(bev::encode_bev(random_cloud(100, 8, g), g));
  const std::string header = "40 40 6\n";
  ASSERT_GE(bytes.size(), header.size());
  EXPECT_EQ(std::string(reinterpret_cast<const char*>(bytes.data()), header.size()), header);
  EXPECT_EQ(bytes.size(), header.size() + 40u * 40u * 6u * 4u);
}

}  // namespace
