#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "radmark/image.hpp"

namespace radmark {

enum class Split { kTrain, kTest, kProbe };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// Images in [0,1] with integer labels in [0, class_count).
struct LabeledImageDataset {
  std::string dataset_id;
  ImageShape shape;
  std::vector<Image> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  Split split = Split::kTrain;

  int class_count() const { return static_cast<int>(class_names.size()); }
  std::size_t size() const { return images.size(); }
  int input_dim() const { return shape.size(); }

  // Throws SchemaError naming the first offending record.
  void validate() const;
  std::vector<std::size_t> indices_of_class(int c) const;
  std::vector<std::size_t> class_sizes() const;
};

struct ClassSubsetSpec {
  std::string source_dataset_id;
  std::vector<int> class_indices;
};

// Which training samples get watermarked, per class.
struct MarkingSelection {
  double wm_ratio = 0.0;
  std::map<int, std::vector<std::size_t>> per_class_indices;
  std::uint64_t seed = 0;

  std::size_t total() const;
  bool operator==(const MarkingSelection&) const = default;
};

enum class DatasetFormat {
  kCifar10,      // CIFAR-10 binary batches
  kCifar100,     // CIFAR-100 binary (coarse, fine) records; fine labels used
  kClassFolders, // root/<class_name>/*.png|ppm
  kArchive,      // ustar archive with index.json + image members
};

DatasetFormat dataset_format_from_string(const std::string& tag);
std::string to_string(DatasetFormat f);

LabeledImageDataset load_dataset(const std::string& path, DatasetFormat format, Split split = Split::kTrain);

// Writes in the class-folder or archive layout. Archives may hold several
// splits; pass every dataset that should go into the same file.
void save_dataset_archive(const std::string& path, const std::vector<const LabeledImageDataset*>& parts);
void save_dataset_folders(const std::string& root, const LabeledImageDataset& ds);

// Keeps only the listed classes, relabelled densely in sorted original order.
LabeledImageDataset build_class_subset(const LabeledImageDataset& ds, const ClassSubsetSpec& spec);

// round-half-up(wm_ratio * class_size) distinct indices per class, drawn
// without replacement; fully determined by the seed.
MarkingSelection select_marking_targets(const LabeledImageDataset& ds, double wm_ratio, std::uint64_t seed);

std::size_t marked_count_for(double wm_ratio, std::size_t class_size);

std::string dataset_digest(const LabeledImageDataset& ds);

}  // namespace radmark
