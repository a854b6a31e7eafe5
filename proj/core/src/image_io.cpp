#include "radmark/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>

#include "radmark/error.hpp"

namespace radmark {

std::vector<std::uint8_t> encode_pnm(const Image& img, const ImageShape& shape) {
  if (shape.channels != 1 && shape.channels != 3) {
    throw InvalidArgument("PNM supports 1 or 3 channels, got " + std::to_string(shape.channels));
  }
  const std::string header = std::string(shape.channels == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(shape.width) + " " + std::to_string(shape.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const int plane = shape.plane();
  for (int p = 0; p < plane; ++p) {
    for (int c = 0; c < shape.channels; ++c) out.push_back(to_byte(img[c * plane + p]));
  }
  return out;
}

namespace {

std::size_t pnm_token(std::span<const std::uint8_t> b, std::size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t v = 0;
  bool any = false;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos] - '0');
    ++pos;
    any = true;
  }
  if (!any) throw SchemaError("malformed PNM header");
  return v;
}

}  // namespace

DecodedImage decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw SchemaError("not a binary PNM image");
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  const auto w = pnm_token(bytes, pos);
  const auto h = pnm_token(bytes, pos);
  const auto maxval = pnm_token(bytes, pos);
  if (maxval != 255) throw SchemaError("only 8-bit PNM is supported");
  ++pos;  // single whitespace before raster
  const std::size_t need = w * h * channels;
  if (bytes.size() < pos + need) throw CorruptionError("truncated PNM raster");
  DecodedImage out;
  out.shape = {channels, static_cast<int>(h), static_cast<int>(w)};
  out.pixels.resize(static_cast<Eigen::Index>(need));
  const int plane = out.shape.plane();
  for (int p = 0; p < plane; ++p) {
    for (int c = 0; c < channels; ++c) out.pixels[c * plane + p] = from_byte(bytes[pos + p * channels + c]);
  }
  return out;
}

namespace {

void png_write_mem(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

void png_flush_noop(png_structp) {}

}  // namespace

DecodedImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw SchemaError(std::string("PNG decode failed: ") + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<std::uint8_t> raster(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raster.data(), 0, nullptr)) {
    png_image_free(&image);
    throw SchemaError(std::string("PNG decode failed: ") + image.message);
  }
  DecodedImage out;
  out.shape = {channels, static_cast<int>(image.height), static_cast<int>(image.width)};
  out.pixels.resize(out.shape.size());
  const int plane = out.shape.plane();
  for (int p = 0; p < plane; ++p) {
    for (int c = 0; c < channels; ++c) out.pixels[c * plane + p] = from_byte(raster[p * channels + c]);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& img, const ImageShape& shape) {
  if (shape.channels != 1 && shape.channels != 3) {
    throw InvalidArgument("PNG encoder supports 1 or 3 channels");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(shape.width * shape.channels));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed");
  }
  png_set_write_fn(png, &out, png_write_mem, png_flush_noop);
  png_set_IHDR(png, info, shape.width, shape.height, 8,
               shape.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int plane = shape.plane();
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      for (int c = 0; c < shape.channels; ++c) {
        row[x * shape.channels + c] = to_byte(img[c * plane + y * shape.width + x]);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

DecodedImage decode_image(std::span<const std::uint8_t> bytes, const std::string& name) {
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  try {
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(bytes);
  } catch (const Error& e) {
    throw SchemaError(name + ": " + e.what());
  }
  throw SchemaError(name + ": unsupported image encoding (expected PNG or binary PNM)");
}

}  // namespace radmark
