// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace xrf::archive {

namespace {

constexpr std::string_view kMagic = "XRFARC 1";

void write_le(std::ofstream& f, const ad::Matrix& m) {
  std::vector<std::uint64_t> words(static_cast<std::size_t>(m.size()));
  std::memcpy(words.data(), m.data(), words.size() * sizeof(double));
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& w : words) w = __builtin_bswap64(w);
  }
  f.write(reinterpret_cast<const char*>(words.data()),
          static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
}

}  // namespace

void Archive::put(std::string name, ad::Matrix value) {
  for (auto& a : arrays) {
    if (a.name == name) {
      a.value = std::move(value);
      return;
    }
  }
  arrays.push_back({std::move(name), std::move(value)});
}

bool Archive::contains(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

const ad::Matrix& Archive::get(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a.value;
  }
  throw std::runtime_error("archive has no array named '" + name + "'");
}

void save_archive(const Archive& a, const std::filesystem::path& path) {
  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& arr : a.arrays) {
    table.push_back({{"name", arr.name},
                     {"rows", arr.value.rows()},
                     {"cols", arr.value.cols()},
                     {"offset", offset}});
    offset += static_cast<std::uint64_t>(arr.value.size()) * sizeof(double);
  }
  const nlohmann::json doc = {{"metadata", a.metadata}, {"arrays", table}};
  const std::string text = doc.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << kMagic << '\n' << "header " << text.size() << '\n' << text << '\n';
  for (const auto& arr : a.arrays) write_le(f, arr.value);
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open archive " + path.string());
  auto malformed = [&](const std::string& why) {
    return std::runtime_error("malformed archive " + path.string() + ": " + why);
  };
  std::string line;
  if (!std::getline(f, line) || line != kMagic) throw malformed("bad magic");
  if (!std::getline(f, line) || line.rfind("header ", 0) != 0) throw malformed("missing header line");
  std::size_t length = 0;
  try {
    length = std::stoull(line.substr(7));
  } catch (const std::exception&) {
    throw malformed("bad header length");
  }
  std::string text(length, '\0');
  f.read(text.data(), static_cast<std::streamsize>(length));
  if (static_cast<std::size_t>(f.gcount()) != length || f.get() != '\n') {
    throw malformed("truncated header");
  }
  Archive a;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    a.metadata = doc.at("metadata");
    std::uint64_t expected_offset = 0;
    for (const auto& e : doc.at("arrays")) {
      const auto rows = e.at("rows").get<ad::Index>();
      const auto cols = e.at("cols").get<ad::Index>();
      if (rows < 0 || cols < 0) throw malformed("negative array shape");
      if (e.at("offset").get<std::uint64_t>() != expected_offset) throw malformed("non-contiguous arrays");
      const auto count = static_cast<std::size_t>(rows * cols);
      std::vector<std::uint64_t> words(count);
      f.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * 8));
      if (static_cast<std::size_t>(f.gcount()) != count * 8) throw malformed("truncated array blob");
      if constexpr (std::endian::native == std::endian::big) {
        for (auto& w : words) w = __builtin_bswap64(w);
      }
      ad::Matrix m(rows, cols);
      std::memcpy(m.data(), words.data(), count * 8);
      a.arrays.push_back({e.at("name").get<std::string>(), std::move(m)});
      expected_offset += count * 8;
    }
  } catch (const nlohmann::json::exception& e) {
    throw malformed(e.what());
  }
  if (f.peek() != std::char_traits<char>::eof()) throw malformed("trailing bytes");
  return a;
}

}  // namespace xrf::archive
