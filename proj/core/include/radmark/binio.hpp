#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radmark {

// Little-endian byte buffer writer used by every binary container.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f32(float v);
  void f64(double v);
  void raw(std::span<const std::uint8_t> bytes);
  void raw(std::string_view bytes);
  // u64 length followed by the bytes.
  void section(std::span<const std::uint8_t> bytes);
  void section(std::string_view bytes);

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; any overrun throws CorruptionError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : data_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  float f32();
  double f64();
  std::span<const std::uint8_t> raw(std::size_t n);
  std::span<const std::uint8_t> section();
  std::string section_string();

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
// Writes through a temporary sibling and renames, so readers never observe a
// partially written file.
void write_file_bytes_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_text_atomic(const std::string& path, std::string_view text);
std::string read_file_text(const std::string& path);

}  // namespace radmark
