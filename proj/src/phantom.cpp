// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/phantom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xrf/hash.hpp"
#include "xrf/rng.hpp"

namespace xrf::phantom {

namespace {

double param_or(const PhantomParams& p, std::string_view key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void reject_unknown(const PhantomParams& p,
                    std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : p) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw std::invalid_argument("unknown phantom parameter '" + k + "'");
    }
  }
}

Volume empty_volume(int size, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be > 0");
  Volume v;
  v.dims = {size, size, size};
  v.spacing = spacing;
  v.voxels.assign(v.voxel_count(), 0.0f);
  return v;
}

// Normalised voxel-centre coordinate in (-1, 1).
double centre(int i, int n) { return 2.0 * (i + 0.5) / n - 1.0; }

template <typename Fn>
void fill(Volume& v, Fn&& fn) {
  const int n = v.dims[0];
  for (int z = 0; z < n; ++z) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        v.voxels[v.index(x, y, z)] =
            static_cast<float>(fn(centre(x, n), centre(y, n), centre(z, n)));
      }
    }
  }
}

Volume make_cube(int size, const PhantomParams& p) {
  reject_unknown(p, {"spacing", "mu", "margin"});
  Volume v = empty_volume(size, param_or(p, "spacing", 1.0));
  const double mu = param_or(p, "mu", 0.02);
  const int margin = static_cast<int>(param_or(p, "margin", size / 4));
  if (mu < 0.0) throw std::invalid_argument("cube: mu must be >= 0");
  if (margin < 0 || 2 * margin >= size) {
    throw std::invalid_argument("cube: margin leaves no interior");
  }
  for (int z = margin; z < size - margin; ++z) {
    for (int y = margin; y < size - margin; ++y) {
      for (int x = margin; x < size - margin; ++x) {
        v.voxels[v.index(x, y, z)] = static_cast<float>(mu);
      }
    }
  }
  return v;
}

struct Ellipsoid {
  double cx, cy, cz;
  double ax, ay, az;
  double cos_t, sin_t;  // rotation about z
  double mu;

  bool contains(double x, double y, double z) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double dz = z - cz;
    const double u = cos_t * dx + sin_t * dy;
    const double w = -sin_t * dx + cos_t * dy;
    return (u * u) / (ax * ax) + (w * w) / (ay * ay) + (dz * dz) / (az * az) <= 1.0;
  }
};

Volume make_ellipsoids(int size, std::uint64_t seed, const PhantomParams& p) {
  reject_unknown(p, {"spacing", "mu_body"});
  Volume v = empty_volume(size, param_or(p, "spacing", 1.0));
  const double mu_body = param_or(p, "mu_body", 0.02);
  Rng rng(seed);
  std::vector<Ellipsoid> shapes;
  shapes.push_back({0, 0, 0, 0.85, 0.7, 0.9, 1.0, 0.0, mu_body});
  const int inner = 4 + static_cast<int>(rng.uniform_index(8));
  for (int k = 0; k < inner; ++k) {
    Ellipsoid e{};
    e.cx = rng.uniform(-0.5, 0.5);
    e.cy = rng.uniform(-0.5, 0.5);
    e.cz = rng.uniform(-0.5, 0.5);
    e.ax = rng.uniform(0.08, 0.35);
    e.ay = rng.uniform(0.08, 0.35);
    e.az = rng.uniform(0.08, 0.35);
    // Rational parameterisation of the rotation keeps placement free of libm.
    const double t = rng.uniform(-1.0, 1.0);
    e.cos_t = (1.0 - t * t) / (1.0 + t * t);
    e.sin_t = 2.0 * t / (1.0 + t * t);
    e.mu = rng.uniform(-0.015, 0.03);
    shapes.push_back(e);
  }
  fill(v, [&](double x, double y, double z) {
    double mu = 0.0;
    for (const auto& e : shapes) {
      if (e.contains(x, y, z)) mu += e.mu;
    }
    return std::max(mu, 0.0);
  });
  return v;
}

Volume make_knee(int size, std::uint64_t seed, const PhantomParams& p) {
  reject_unknown(p, {"spacing", "mu_tissue", "mu_bone", "tissue_radius",
                     "bone_radius", "gap", "offset"});
  Volume v = empty_volume(size, param_or(p, "spacing", 1.0));
  const double mu_tissue = param_or(p, "mu_tissue", 0.02);
  const double mu_bone = param_or(p, "mu_bone", 0.06);
  const double r_tissue = param_or(p, "tissue_radius", 0.8);
  const double r_bone = param_or(p, "bone_radius", 0.3);
  const double gap = param_or(p, "gap", 0.12);
  const double offset = param_or(p, "offset", 0.08);
  if (mu_tissue < 0 || mu_bone < 0) throw std::invalid_argument("knee_toy: mu must be >= 0");
  Rng rng(seed);
  const double fx = rng.uniform(-offset, offset);
  const double fy = rng.uniform(-offset, offset);
  const double tx = rng.uniform(-offset, offset);
  const double ty = rng.uniform(-offset, offset);
  constexpr double kHeight = 0.95;
  fill(v, [&](double x, double y, double z) {
    if (std::abs(z) > kHeight) return 0.0;
    const bool femur = z >= 0.5 * gap &&
                       (x - fx) * (x - fx) + (y - fy) * (y - fy) <= r_bone * r_bone;
    const bool tibia = z <= -0.5 * gap &&
                       (x - tx) * (x - tx) + (y - ty) * (y - ty) <= r_bone * r_bone;
    if (femur || tibia) return mu_bone;
    if (x * x + y * y <= r_tissue * r_tissue) return mu_tissue;
    return 0.0;
  });
  return v;
}

constexpr std::string_view kMagic = "XRFVOL 1";

}  // namespace

void Volume::validate() const {
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("volume dims must be >= 1");
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw std::invalid_argument("volume spacing must be finite and > 0");
  }
  if (voxels.size() != voxel_count()) {
    throw std::invalid_argument("volume voxel count does not match dims");
  }
  for (float mu : voxels) {
    if (!std::isfinite(mu) || mu < 0.0f) {
      throw std::invalid_argument("volume voxels must be finite and >= 0");
    }
  }
}

std::string Volume::content_hash() const {
  Fnv1a64 h;
  std::ostringstream os;
  os << dims[0] << ' ' << dims[1] << ' ' << dims[2] << ' ';
  os.precision(17);
  os << spacing;
  h.update(os.str());
  h.update(std::as_bytes(std::span(voxels)));
  return h.hex();
}

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "cube") return PhantomKind::kCube;
  if (name == "ellipsoids") return PhantomKind::kEllipsoids;
  if (name == "knee_toy") return PhantomKind::kKneeToy;
  throw std::invalid_argument("unknown phantom kind '" + std::string(name) + "'");
}

std::string_view phantom_kind_name(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::kCube: return "cube";
    case PhantomKind::kEllipsoids: return "ellipsoids";
    case PhantomKind::kKneeToy: return "knee_toy";
  }
  return "unknown";
}

Volume make_phantom(PhantomKind kind, int size, std::uint64_t seed,
                    const PhantomParams& params) {
  if (size < 1) throw std::invalid_argument("phantom size must be >= 1");
  switch (kind) {
    case PhantomKind::kCube: return make_cube(size, params);
    case PhantomKind::kEllipsoids: return make_ellipsoids(size, seed, params);
    case PhantomKind::kKneeToy: return make_knee(size, seed, params);
  }
  throw std::invalid_argument("unknown phantom kind");
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
  v.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  std::ostringstream header;
  header.precision(17);
  header << kMagic << '\n'
         << "dims " << v.dims[0] << ' ' << v.dims[1] << ' ' << v.dims[2] << '\n'
         << "spacing " << v.spacing << '\n'
         << "dtype f32le\n"
         << "layout x-fastest\n"
         << "end\n";
  const std::string h = header.str();
  f.write(h.data(), static_cast<std::streamsize>(h.size()));
  std::vector<std::uint32_t> words(v.voxels.size());
  std::memcpy(words.data(), v.voxels.data(), words.size() * sizeof(float));
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& w : words) w = __builtin_bswap32(w);
  }
  f.write(reinterpret_cast<const char*>(words.data()),
          static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

Volume load_volume(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open volume " + path.string());
  auto malformed = [&](const std::string& why) {
    return std::runtime_error("malformed volume header in " + path.string() + ": " + why);
  };
  std::string line;
  if (!std::getline(f, line) || line != kMagic) throw malformed("bad magic");
  Volume v;
  bool have_dims = false, have_spacing = false, have_dtype = false, have_layout = false;
  while (true) {
    if (!std::getline(f, line)) throw malformed("missing 'end'");
    if (line == "end") break;
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "dims") {
      is >> v.dims[0] >> v.dims[1] >> v.dims[2];
      if (!is) throw malformed("dims");
      have_dims = true;
    } else if (key == "spacing") {
      is >> v.spacing;
      if (!is) throw malformed("spacing");
      have_spacing = true;
    } else if (key == "dtype") {
      std::string t;
      is >> t;
      if (t != "f32le") throw malformed("unsupported dtype '" + t + "'");
      have_dtype = true;
    } else if (key == "layout") {
      std::string t;
      is >> t;
      if (t != "x-fastest") throw malformed("unsupported layout '" + t + "'");
      have_layout = true;
    } else {
      throw malformed("unknown key '" + key + "'");
    }
  }
  if (!(have_dims && have_spacing && have_dtype && have_layout)) {
    throw malformed("missing required key");
  }
  for (int d : v.dims) {
    if (d < 1) throw malformed("dims must be >= 1");
  }
  const std::size_t count = v.voxel_count();
  std::vector<std::uint32_t> words(count);
  f.read(reinterpret_cast<char*>(words.data()),
         static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
  const auto got = static_cast<std::size_t>(f.gcount());
  if (got != count * sizeof(std::uint32_t)) {
    throw std::runtime_error("volume blob length mismatch in " + path.string() +
                             ": expected " + std::to_string(count * 4) +
                             " bytes, found " + std::to_string(got));
  }
  if (f.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("volume blob length mismatch in " + path.string() +
                             ": trailing bytes after voxel data");
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& w : words) w = __builtin_bswap32(w);
  }
  v.voxels.resize(count);
  std::memcpy(v.voxels.data(), words.data(), count * sizeof(float));
  v.validate();
  return v;
}

}  // namespace xrf::phantom
