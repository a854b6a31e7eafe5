#include "radmark/transforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "radmark/error.hpp"

namespace radmark {

namespace {

struct ParsedSpec {
  std::string kind;
  double value = 0.0;
};

ParsedSpec parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw InvalidArgument("transform '" + spec + "' must look like kind:value");
  ParsedSpec p{spec.substr(0, colon), 0.0};
  try {
    std::size_t used = 0;
    p.value = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidArgument("transform '" + spec + "' has a non-numeric value");
  }
  if (p.kind == "rotate") return p;
  if (p.kind == "rescale" && p.value > 0.0 && p.value <= 1.0) return p;
  if (p.kind == "crop" && p.value >= 1.0) return p;
  if (p.kind == "jpeg" && p.value >= 1.0 && p.value <= 100.0) return p;
  throw InvalidArgument("unsupported transform '" + spec + "'");
}

float sample_bilinear(const Image& img, const ImageShape& s, int c, double y, double x) {
  y = std::clamp(y, 0.0, s.height - 1.0);
  x = std::clamp(x, 0.0, s.width - 1.0);
  const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
  const int y1 = std::min(y0 + 1, s.height - 1), x1 = std::min(x0 + 1, s.width - 1);
  const double fy = y - y0, fx = x - x0;
  auto at = [&](int yy, int xx) { return static_cast<double>(img[(c * s.height + yy) * s.width + xx]); };
  return static_cast<float>((1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
                            fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1)));
}

// Resamples the window [y0, y0+h) x [x0, x0+w) of `img` onto an out_h x out_w grid.
Image resample(const Image& img, const ImageShape& s, double y0, double x0, double h, double w, int out_h, int out_w) {
  Image out(s.channels * out_h * out_w);
  for (int c = 0; c < s.channels; ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        const double sy = y0 + (y + 0.5) * h / out_h - 0.5;
        const double sx = x0 + (x + 0.5) * w / out_w - 0.5;
        out[(c * out_h + y) * out_w + x] = sample_bilinear(img, s, c, sy, sx);
      }
    }
  }
  return out;
}

Image rotate(const Image& img, const ImageShape& s, double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  const double cy = (s.height - 1) / 2.0, cx = (s.width - 1) / 2.0;
  Image out(img.size());
  for (int c = 0; c < s.channels; ++c) {
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        const double dy = y - cy, dx = x - cx;
        const double sy = cy + std::cos(t) * dy - std::sin(t) * dx;
        const double sx = cx + std::sin(t) * dy + std::cos(t) * dx;
        out[(c * s.height + y) * s.width + x] = sample_bilinear(img, s, c, sy, sx);
      }
    }
  }
  return out;
}

constexpr std::array<int, 64> kLumaTable = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                            14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                            18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                            49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

Image jpeg_like(const Image& img, const ImageShape& s, double quality) {
  const double scale = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
  std::array<double, 64> q;
  for (int i = 0; i < 64; ++i) q[i] = std::clamp(std::floor((kLumaTable[i] * scale + 50.0) / 100.0), 1.0, 255.0);
  std::array<double, 64> basis;  // basis[u*8+x] = C(u) cos((2x+1)u pi/16)
  for (int u = 0; u < 8; ++u) {
    for (int x = 0; x < 8; ++x) {
      basis[u * 8 + x] = (u == 0 ? std::sqrt(0.125) : 0.5) * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }
  Image out = img;
  for (int c = 0; c < s.channels; ++c) {
    for (int by = 0; by < s.height; by += 8) {
      for (int bx = 0; bx < s.width; bx += 8) {
        std::array<double, 64> block{}, coef{};
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            const int yy = std::min(by + y, s.height - 1), xx = std::min(bx + x, s.width - 1);
            block[y * 8 + x] = 255.0 * img[(c * s.height + yy) * s.width + xx] - 128.0;
          }
        }
        for (int u = 0; u < 8; ++u) {
          for (int v = 0; v < 8; ++v) {
            double acc = 0.0;
            for (int y = 0; y < 8; ++y) {
              for (int x = 0; x < 8; ++x) acc += basis[u * 8 + y] * basis[v * 8 + x] * block[y * 8 + x];
            }
            coef[u * 8 + v] = std::round(acc / q[u * 8 + v]) * q[u * 8 + v];
          }
        }
        for (int y = 0; y < 8 && by + y < s.height; ++y) {
          for (int x = 0; x < 8 && bx + x < s.width; ++x) {
            double acc = 0.0;
            for (int u = 0; u < 8; ++u) {
              for (int v = 0; v < 8; ++v) acc += basis[u * 8 + y] * basis[v * 8 + x] * coef[u * 8 + v];
            }
            out[(c * s.height + by + y) * s.width + bx + x] = static_cast<float>(std::clamp((acc + 128.0) / 255.0, 0.0, 1.0));
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

void validate_transform(const std::string& spec) { parse(spec); }

Image apply_transform(const Image& img, const ImageShape& s, const std::string& spec) {
  if (img.size() != s.size()) throw InvalidArgument("transform: image does not match shape " + s.str());
  const auto p = parse(spec);
  Image out;
  if (p.kind == "rotate") {
    out = rotate(img, s, p.value);
  } else if (p.kind == "rescale") {
    const int h = std::max(1, static_cast<int>(std::lround(s.height * p.value)));
    const int w = std::max(1, static_cast<int>(std::lround(s.width * p.value)));
    const Image small = resample(img, s, 0, 0, s.height, s.width, h, w);
    out = resample(small, {s.channels, h, w}, 0, 0, h, w, s.height, s.width);
  } else if (p.kind == "crop") {
    const int size = static_cast<int>(p.value);
    if (size > std::min(s.height, s.width)) throw InvalidArgument("crop size exceeds the image");
    out = resample(img, s, (s.height - size) / 2.0, (s.width - size) / 2.0, size, size, s.height, s.width);
  } else {
    out = jpeg_like(img, s, p.value);
  }
  return quantize_8bit(out);
}

}  // namespace radmark
