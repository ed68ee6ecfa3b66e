// FNV-1a 64-bit checksums for artifact manifests.
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include "gratstat/core.hpp"

namespace gratstat {

inline constexpr std::uint64_t FNV_OFFSET = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t FNV_PRIME = 0x100000001b3ull;

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = FNV_OFFSET) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= FNV_PRIME;
  }
  return h;
}

inline std::string fnv_hex(std::uint64_t h) {
  static const char *digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

inline std::string fnv_file_hex(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open for checksum: " + path);
  std::uint64_t h = FNV_OFFSET;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a(std::string_view(buf, static_cast<size_t>(in.gcount())), h);
    if (!in) break;
  }
  return fnv_hex(h);
}

} // namespace gratstat
