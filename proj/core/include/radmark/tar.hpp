#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace radmark {

// Minimal POSIX ustar support: regular files only, names up to 100 bytes.
struct TarEntry {
  std::string name;
  std::vector<std::uint8_t> data;
};

std::vector<std::uint8_t> tar_pack(std::span<const TarEntry> entries);
std::map<std::string, std::vector<std::uint8_t>> tar_unpack(std::span<const std::uint8_t> archive);

}  // namespace radmark
