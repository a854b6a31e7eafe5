#pragma once

#include <cstdint>

#include "radmark/dataset.hpp"

namespace radmark {

// Procedural stand-in for a small natural-image classification task. Each
// class is a fixed random mixture of coloured gratings; samples are shifted,
// rescaled copies buried in class-independent clutter and pixel noise.
struct ToyTaskConfig {
  int classes = 8;
  // Additional classes generated with the same process but never used as
  // task labels; they feed extraction transfer pools.
  int heldout_classes = 4;
  int train_per_class = 400;
  int test_per_class = 100;
  int heldout_per_class = 400;
  ImageShape shape{3, 32, 32};
  double clutter = 2.0;  // about 88% test accuracy for desk_cnn at 15 epochs
  double pixel_noise = 0.06;
  std::uint64_t seed = 1;
};

struct ToyTask {
  LabeledImageDataset train;
  LabeledImageDataset test;
  LabeledImageDataset heldout;  // images from the held-out classes
};

ToyTask make_toy_task(const ToyTaskConfig& config);

// Two Gaussian blobs in pixel space, linearly separable by construction.
LabeledImageDataset make_blob_dataset(int per_class, const ImageShape& shape, double separation, std::uint64_t seed,
                                      Split split);

// Random-phase images with a 1/f amplitude spectrum.
std::vector<Image> make_natural_pool(int count, const ImageShape& shape, std::uint64_t seed);

}  // namespace radmark
