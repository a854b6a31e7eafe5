#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace radmark {

struct ImageShape {
  int channels = 3;
  int height = 32;
  int width = 32;

  int size() const { return channels * height * width; }
  int plane() const { return height * width; }
  bool operator==(const ImageShape&) const = default;
  std::string str() const;
};

// One image, CHW row-major, values in [0,1].
using Image = Eigen::VectorXf;

// Batch of images in double precision, one flattened CHW image per row.
using ImageBatch = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ImageBatch to_batch(std::span<const Image> images);
ImageBatch to_batch(std::span<const Image> images, std::span<const std::size_t> indices);
Image row_to_image(const ImageBatch& batch, Eigen::Index row);

// Nearest point of the 256-level grid {k/255}.
float quantize_8bit(float v);
Image quantize_8bit(const Image& img);
bool on_8bit_grid(const Image& img);
std::uint8_t to_byte(float v);
inline float from_byte(std::uint8_t b) { return static_cast<float>(b) / 255.0f; }

}  // namespace radmark
