#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "radmark/image.hpp"

namespace radmark {

struct DecodedImage {
  ImageShape shape;
  Image pixels;
};

// Binary PPM (P6) or PGM (P5), 8-bit.
std::vector<std::uint8_t> encode_pnm(const Image& img, const ImageShape& shape);
DecodedImage decode_pnm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const Image& img, const ImageShape& shape);
DecodedImage decode_png(std::span<const std::uint8_t> bytes);

// Dispatches on magic bytes (PNG signature or P5/P6).
DecodedImage decode_image(std::span<const std::uint8_t> bytes, const std::string& name);

}  // namespace radmark
