// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Container of named f64 arrays plus JSON metadata.
//
//   XRFARC 1\n
//   header <byte length of the JSON text>\n
//   <JSON text>\n
//   <array blobs, little-endian IEEE-754 binary64, in table order>
//
// JSON: {"metadata": {...}, "arrays": [{"name", "rows", "cols", "offset"}]}
// where offset counts bytes from the start of the blob section. Arrays are
// row-major. Round-trips bit-exactly.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "xrf/autodiff.hpp"

namespace xrf::archive {

struct NamedArray {
  std::string name;
  ad::Matrix value;
};

struct Archive {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  void put(std::string name, ad::Matrix value);
  bool contains(const std::string& name) const;
  /// Throws std::runtime_error naming the missing array.
  const ad::Matrix& get(const std::string& name) const;
};

void save_archive(const Archive& a, const std::filesystem::path& path);
Archive load_archive(const std::filesystem::path& path);

}  // namespace xrf::archive
