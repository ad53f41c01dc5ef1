// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace xrf::phantom {

/// Dense grid of linear attenuation coefficients (mm^-1).
///
/// Voxel (x, y, z) lives at index x + nx * (y + ny * z): x varies fastest.
/// The grid is centred on the world origin; z is the vertical (rotation) axis.
struct Volume {
  std::array<int, 3> dims{1, 1, 1};
  double spacing = 1.0;  // mm per voxel, isotropic
  std::vector<float> voxels;

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
  }
  float at(int x, int y, int z) const { return voxels[index(x, y, z)]; }
  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  /// Physical half-extent along axis a, in mm.
  double half_extent(int a) const { return 0.5 * dims[a] * spacing; }

  /// Throws std::invalid_argument if dims, spacing or any voxel is invalid.
  void validate() const;
  /// FNV-1a over dims, spacing and voxel bytes.
  std::string content_hash() const;
};

enum class PhantomKind { kCube, kEllipsoids, kKneeToy };

PhantomKind parse_phantom_kind(std::string_view name);
std::string_view phantom_kind_name(PhantomKind kind);

using PhantomParams = std::map<std::string, double, std::less<>>;

/// Builds a size^3 phantom. Recognised params (all optional):
///
///   all kinds   spacing (1.0 mm)
///   cube        mu (0.02), margin (size/4 voxels on each side)
///   ellipsoids  mu_body (0.02). A body ellipsoid plus 4-11 random inner
///               ellipsoids: centres in [-0.5, 0.5]^3, semi-axes in
///               [0.08, 0.35], rotation about z, additive mu in
///               [-0.015, 0.03]; the sum is clamped at 0.
///   knee_toy    mu_tissue (0.02), mu_bone (0.06), tissue_radius (0.8),
///               bone_radius (0.3), gap (0.12), offset (0.08)
///
/// Lengths other than margin are fractions of the half-extent. Unknown keys
/// are rejected.
Volume make_phantom(PhantomKind kind, int size, std::uint64_t seed,
                    const PhantomParams& params = {});

/// File layout: UTF-8 header lines
///
///   XRFVOL 1
///   dims <nx> <ny> <nz>
///   spacing <mm>
///   dtype f32le
///   layout x-fastest
///   end
///
/// followed immediately by nx*ny*nz little-endian IEEE-754 binary32 values.
void save_volume(const Volume& v, const std::filesystem::path& path);
Volume load_volume(const std::filesystem::path& path);

}  // namespace xrf::phantom
