// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/hash.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace xrf {

std::string Fnv1a64::hex() const {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx",
                static_cast<unsigned long long>(state_));
  return std::string(buf.data());
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for hashing");
  Fnv1a64 h;
  std::array<char, 1 << 16> buf{};
  while (f) {
    f.read(buf.data(), buf.size());
    const auto n = static_cast<std::size_t>(f.gcount());
    h.update(std::as_bytes(std::span(buf.data(), n)));
  }
  return h.hex();
}

}  // namespace xrf
