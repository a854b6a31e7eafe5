#include "radmark/image.hpp"

#include <algorithm>
#include <cmath>

namespace radmark {

std::string ImageShape::str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

ImageBatch to_batch(std::span<const Image> images) {
  if (images.empty()) return {};
  ImageBatch out(static_cast<Eigen::Index>(images.size()), images.front().size());
  for (std::size_t i = 0; i < images.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = images[i].cast<double>().transpose();
  return out;
}

ImageBatch to_batch(std::span<const Image> images, std::span<const std::size_t> indices) {
  if (indices.empty()) return {};
  ImageBatch out(static_cast<Eigen::Index>(indices.size()), images[indices.front()].size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = images[indices[i]].cast<double>().transpose();
  }
  return out;
}

Image row_to_image(const ImageBatch& batch, Eigen::Index row) {
  return batch.row(row).transpose().cast<float>();
}

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

float quantize_8bit(float v) { return from_byte(to_byte(v)); }

Image quantize_8bit(const Image& img) { return img.unaryExpr([](float v) { return quantize_8bit(v); }); }

bool on_8bit_grid(const Image& img) {
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    if (quantize_8bit(img[i]) != img[i]) return false;
  }
  return true;
}

}  // namespace radmark
