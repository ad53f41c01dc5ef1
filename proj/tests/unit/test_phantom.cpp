// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "xrf/hash.hpp"
#include "xrf/phantom.hpp"
#include "xrf/rng.hpp"

namespace {

using namespace xrf::phantom;

TEST(Rng, SameSeedSameStream) {
  xrf::Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    if (i == 0) EXPECT_NE(x, c.next_u64());
  }
}

TEST(Rng, StateRoundTripResumesStream) {
  xrf::Rng a(9);
  for (int i = 0; i < 10; ++i) a.normal();
  xrf::Rng b;
  b.set_state(a.state());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, UniformIndexCoversRangeOnly) {
  xrf::Rng r(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[r.uniform_index(7)];
  for (int c : counts) EXPECT_GT(c, 800);
}

TEST(Hash, Fnv1aReferenceValues) {
  xrf::Fnv1a64 h;
  EXPECT_EQ(h.digest(), 0xcbf29ce484222325ULL);
  h.update(std::string_view("a"));
  EXPECT_EQ(h.digest(), 0xaf63dc4c8601ec8cULL);
  xrf::Fnv1a64 g;
  g.update(std::string_view("foobar"));
  EXPECT_EQ(g.digest(), 0x85944171f73967e8ULL);
}

TEST(Phantom, CubeWithoutMarginIsConstant) {
  const Volume v = make_phantom(PhantomKind::kCube, 8, 0, {{"mu", 0.02}, {"margin", 0}});
  ASSERT_EQ(v.voxel_count(), 512u);
  for (float x : v.voxels) EXPECT_EQ(x, 0.02f);
}

TEST(Phantom, CubeMarginIsEmpty) {
  const Volume v = make_phantom(PhantomKind::kCube, 8, 0, {{"mu", 0.03}, {"margin", 2}});
  for (int z = 0; z < 8; ++z) {
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const bool inside = x >= 2 && x < 6 && y >= 2 && y < 6 && z >= 2 && z < 6;
        EXPECT_EQ(v.at(x, y, z), inside ? 0.03f : 0.0f);
      }
    }
  }
}

TEST(Phantom, EllipsoidsDeterministicAndSeedSensitive) {
  const auto a = make_phantom(PhantomKind::kEllipsoids, 64, 7);
  const auto b = make_phantom(PhantomKind::kEllipsoids, 64, 7);
  const auto c = make_phantom(PhantomKind::kEllipsoids, 64, 8);
  EXPECT_EQ(a.content_hash(), b.content_hash());
  EXPECT_EQ(a.voxels, b.voxels);
  EXPECT_NE(a.content_hash(), c.content_hash());
}

TEST(Phantom, EveryKindIsFiniteAndNonNegative) {
  for (auto kind : {PhantomKind::kCube, PhantomKind::kEllipsoids, PhantomKind::kKneeToy}) {
    for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
      const auto v = make_phantom(kind, 24, seed);
      for (float x : v.voxels) {
        ASSERT_TRUE(std::isfinite(x));
        ASSERT_GE(x, 0.0f);
      }
    }
  }
}

TEST(Phantom, KneeToyMaxIsBoneMu) {
  const auto v = make_phantom(PhantomKind::kKneeToy, 64, 1);
  float mx = 0.0f;
  float mn = 1.0f;
  for (float x : v.voxels) {
    mx = std::max(mx, x);
    mn = std::min(mn, x);
  }
  EXPECT_EQ(mx, 0.06f);
  EXPECT_GE(mn, 0.0f);
  const auto custom = make_phantom(PhantomKind::kKneeToy, 32, 1, {{"mu_bone", 0.09}});
  EXPECT_EQ(*std::max_element(custom.voxels.begin(), custom.voxels.end()), 0.09f);
}

TEST(Phantom, KneeToyHasJointSpaceAtCentre) {
  const auto v = make_phantom(PhantomKind::kKneeToy, 64, 1);
  // The central slice lies inside the gap: tissue only, no bone.
  float mx = 0.0f;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) mx = std::max(mx, v.at(x, y, 32));
  EXPECT_EQ(mx, 0.02f);
}

TEST(Phantom, RejectsBadArguments) {
  EXPECT_THROW(make_phantom(PhantomKind::kCube, 0, 0), std::invalid_argument);
  EXPECT_THROW(parse_phantom_kind("sphere"), std::invalid_argument);
  EXPECT_THROW(make_phantom(PhantomKind::kCube, 8, 0, {{"colour", 1.0}}), std::invalid_argument);
  EXPECT_THROW(make_phantom(PhantomKind::kCube, 8, 0, {{"margin", 4}}), std::invalid_argument);
  EXPECT_EQ(parse_phantom_kind("knee_toy"), PhantomKind::kKneeToy);
}

TEST(VolumeFile, RoundTripIsBitExact) {
  const auto dir = xrf::testing::scratch_dir("vol");
  for (auto kind : {PhantomKind::kCube, PhantomKind::kEllipsoids}) {
    const auto v = make_phantom(kind, 16, 5);
    save_volume(v, dir / "v.xrfv");
    const auto w = load_volume(dir / "v.xrfv");
    EXPECT_EQ(v.dims, w.dims);
    EXPECT_EQ(v.spacing, w.spacing);
    ASSERT_EQ(v.voxels.size(), w.voxels.size());
    EXPECT_EQ(std::memcmp(v.voxels.data(), w.voxels.data(), v.voxels.size() * sizeof(float)), 0);
  }
}

void write_raw(const std::filesystem::path& p, int n_floats, const std::string& dims = "2 2 2") {
  std::ofstream out(p, std::ios::binary);
  out << "XRFVOL 1\ndims " << dims << "\nspacing 1\ndtype f32le\nlayout x-fastest\nend\n";
  const float one = 1.0f;
  for (int i = 0; i < n_floats; ++i) out.write(reinterpret_cast<const char*>(&one), 4);
}

TEST(VolumeFile, BlobLengthMustMatchDims) {
  const auto dir = xrf::testing::scratch_dir("vol");
  write_raw(dir / "ok.xrfv", 8);
  const auto v = load_volume(dir / "ok.xrfv");
  EXPECT_EQ(v.voxel_count(), 8u);
  EXPECT_EQ(v.at(1, 1, 1), 1.0f);
  write_raw(dir / "short.xrfv", 7);
  EXPECT_THROW(load_volume(dir / "short.xrfv"), std::runtime_error);
  write_raw(dir / "long.xrfv", 9);
  EXPECT_THROW(load_volume(dir / "long.xrfv"), std::runtime_error);
}

TEST(VolumeFile, TruncatedSaveIsRejected) {
  const auto dir = xrf::testing::scratch_dir("vol");
  save_volume(make_phantom(PhantomKind::kCube, 8, 0), dir / "v.xrfv");
  std::filesystem::resize_file(dir / "v.xrfv", std::filesystem::file_size(dir / "v.xrfv") - 3);
  EXPECT_THROW(load_volume(dir / "v.xrfv"), std::runtime_error);
}

TEST(VolumeFile, MalformedHeaderIsRejected) {
  const auto dir = xrf::testing::scratch_dir("vol");
  {
    std::ofstream out(dir / "bad.xrfv");
    out << "XRFVOL 2\ndims 1 1 1\n";
  }
  EXPECT_THROW(load_volume(dir / "bad.xrfv"), std::runtime_error);
  write_raw(dir / "neg.xrfv", 0, "0 2 2");
  EXPECT_THROW(load_volume(dir / "neg.xrfv"), std::exception);
}

}  // namespace
