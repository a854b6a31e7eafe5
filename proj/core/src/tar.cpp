#include "radmark/tar.hpp"

#include <cstdio>
#include <cstring>

#include "radmark/error.hpp"

namespace radmark {
namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  std::snprintf(reinterpret_cast<char*>(field), width, "%0*llo", static_cast<int>(width - 1),
                static_cast<unsigned long long>(value));
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) {
    const auto c = field[i];
    if (c == 0 || c == ' ') {
      if (v != 0) break;
      continue;
    }
    if (c < '0' || c > '7') throw CorruptionError("tar header: bad octal field");
    v = v * 8 + (c - '0');
  }
  return v;
}

std::uint32_t header_checksum(const std::uint8_t* h) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) sum += (i >= 148 && i < 156) ? ' ' : h[i];
  return sum;
}

}  // namespace

std::vector<std::uint8_t> tar_pack(std::span<const TarEntry> entries) {
  std::vector<std::uint8_t> out;
  for (const auto& e : entries) {
    if (e.name.empty() || e.name.size() > 99) throw InvalidArgument("tar entry name length invalid: " + e.name);
    std::uint8_t h[kBlock] = {};
    std::memcpy(h, e.name.data(), e.name.size());
    put_octal(h + 100, 8, 0644);
    put_octal(h + 108, 8, 0);
    put_octal(h + 116, 8, 0);
    put_octal(h + 124, 12, e.data.size());
    put_octal(h + 136, 12, 0);
    h[156] = '0';
    std::memcpy(h + 257, "ustar", 6);
    h[263] = '0';
    h[264] = '0';
    std::snprintf(reinterpret_cast<char*>(h + 148), 8, "%06o", header_checksum(h));
    h[155] = ' ';
    out.insert(out.end(), h, h + kBlock);
    out.insert(out.end(), e.data.begin(), e.data.end());
    out.resize(out.size() + (kBlock - e.data.size() % kBlock) % kBlock, 0);
  }
  out.resize(out.size() + 2 * kBlock, 0);
  return out;
}

std::map<std::string, std::vector<std::uint8_t>> tar_unpack(std::span<const std::uint8_t> archive) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  std::size_t pos = 0;
  while (pos + kBlock <= archive.size()) {
    const std::uint8_t* h = archive.data() + pos;
    bool zero = true;
    for (std::size_t i = 0; i < kBlock && zero; ++i) zero = h[i] == 0;
    if (zero) return out;
    if (get_octal(h + 148, 8) != header_checksum(h)) throw CorruptionError("tar header checksum mismatch");
    const std::string name(reinterpret_cast<const char*>(h), strnlen(reinterpret_cast<const char*>(h), 100));
    const std::uint64_t size = get_octal(h + 124, 12);
    pos += kBlock;
    if (size > archive.size() - pos) throw CorruptionError("tar entry truncated: " + name);
    if (h[156] == '0' || h[156] == 0) {
      out[name].assign(archive.begin() + static_cast<std::ptrdiff_t>(pos),
                       archive.begin() + static_cast<std::ptrdiff_t>(pos + size));
    }
    pos += (size + kBlock - 1) / kBlock * kBlock;
  }
  throw CorruptionError("tar archive missing end-of-archive marker");
}

}  // namespace radmark
