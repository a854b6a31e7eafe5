#include "radmark/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "radmark/binio.hpp"
#include "radmark/digest.hpp"
#include "radmark/error.hpp"
#include "radmark/image_io.hpp"
#include "radmark/tar.hpp"

namespace radmark {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kProbe: return "probe";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  if (s == "probe") return Split::kProbe;
  throw InvalidArgument("unknown split tag: " + s);
}

DatasetFormat dataset_format_from_string(const std::string& tag) {
  if (tag == "cifar10") return DatasetFormat::kCifar10;
  if (tag == "cifar100") return DatasetFormat::kCifar100;
  if (tag == "folders") return DatasetFormat::kClassFolders;
  if (tag == "archive") return DatasetFormat::kArchive;
  throw InvalidArgument("unsupported dataset format: " + tag + " (expected cifar10|cifar100|folders|archive)");
}

std::string to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::kCifar10: return "cifar10";
    case DatasetFormat::kCifar100: return "cifar100";
    case DatasetFormat::kClassFolders: return "folders";
    case DatasetFormat::kArchive: return "archive";
  }
  return "?";
}

void LabeledImageDataset::validate() const {
  if (images.size() != labels.size()) {
    throw SchemaError(dataset_id + ": " + std::to_string(images.size()) + " images but " +
                      std::to_string(labels.size()) + " labels");
  }
  const int m = class_count();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].size() != shape.size()) {
      throw SchemaError(dataset_id + ": record " + std::to_string(i) + " has " +
                        std::to_string(images[i].size()) + " values, expected shape " + shape.str());
    }
    if (labels[i] < 0 || labels[i] >= m) {
      throw SchemaError(dataset_id + ": record " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                        " outside [0," + std::to_string(m) + ")");
    }
    const float lo = images[i].minCoeff();
    const float hi = images[i].maxCoeff();
    if (!(lo >= 0.0f && hi <= 1.0f)) {
      throw SchemaError(dataset_id + ": record " + std::to_string(i) + " has pixel values outside [0,1]");
    }
  }
}

std::vector<std::size_t> LabeledImageDataset::indices_of_class(int c) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == c) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> LabeledImageDataset::class_sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(class_count()), 0);
  for (int l : labels) ++out[static_cast<std::size_t>(l)];
  return out;
}

std::size_t MarkingSelection::total() const {
  std::size_t n = 0;
  for (const auto& [c, idx] : per_class_indices) n += idx.size();
  return n;
}

// ---------------------------------------------------------------------------
// CIFAR binary

namespace {

constexpr ImageShape kCifarShape{3, 32, 32};

std::vector<std::string> read_name_list(const fs::path& p) {
  std::vector<std::string> out;
  if (!fs::exists(p)) return out;
  std::istringstream in(read_file_text(p.string()));
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void append_cifar_file(LabeledImageDataset& ds, const fs::path& file, int label_bytes, int class_count) {
  const auto bytes = read_file_bytes(file.string());
  const std::size_t record = static_cast<std::size_t>(label_bytes + kCifarShape.size());
  if (bytes.size() % record != 0) {
    throw SchemaError(file.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of record size " +
                      std::to_string(record));
  }
  const std::size_t n = bytes.size() / record;
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint8_t* rec = bytes.data() + r * record;
    const int label = rec[label_bytes - 1];  // fine label for CIFAR-100
    if (label >= class_count) {
      throw SchemaError(file.string() + ": record " + std::to_string(r) + " has label " + std::to_string(label) +
                        " in a " + std::to_string(class_count) + "-class set");
    }
    Image img(kCifarShape.size());
    for (int i = 0; i < kCifarShape.size(); ++i) img[i] = from_byte(rec[label_bytes + i]);
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
}

LabeledImageDataset load_cifar(const fs::path& path, bool hundred, Split split) {
  LabeledImageDataset ds;
  ds.shape = kCifarShape;
  ds.split = split;
  const int m = hundred ? 100 : 10;
  const int label_bytes = hundred ? 2 : 1;
  std::vector<fs::path> files;
  fs::path meta_dir = path;
  if (fs::is_directory(path)) {
    if (hundred) {
      files.push_back(path / (split == Split::kTrain ? "train.bin" : "test.bin"));
    } else if (split == Split::kTrain) {
      for (int b = 1; b <= 5; ++b) files.push_back(path / ("data_batch_" + std::to_string(b) + ".bin"));
    } else {
      files.push_back(path / "test_batch.bin");
    }
  } else {
    files.push_back(path);
    meta_dir = path.parent_path();
  }
  for (const auto& f : files) {
    if (!fs::exists(f)) throw IoError("missing CIFAR batch file: " + f.string());
    append_cifar_file(ds, f, label_bytes, m);
  }
  ds.class_names = read_name_list(meta_dir / (hundred ? "fine_label_names.txt" : "batches.meta.txt"));
  if (static_cast<int>(ds.class_names.size()) != m) {
    ds.class_names.clear();
    for (int c = 0; c < m; ++c) ds.class_names.push_back("class_" + std::to_string(c));
  }
  ds.dataset_id = (hundred ? "cifar100:" : "cifar10:") + to_string(split);
  return ds;
}

bool is_image_name(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

void push_decoded(LabeledImageDataset& ds, DecodedImage&& img, int label, const std::string& name) {
  if (ds.images.empty()) {
    ds.shape = img.shape;
  } else if (!(img.shape == ds.shape)) {
    throw SchemaError(name + ": shape " + img.shape.str() + " differs from dataset shape " + ds.shape.str());
  }
  ds.images.push_back(std::move(img.pixels));
  ds.labels.push_back(label);
}

LabeledImageDataset load_folders(const fs::path& root, Split split) {
  fs::path base = root;
  if (fs::is_directory(root / to_string(split))) base = root / to_string(split);
  if (!fs::is_directory(base)) throw IoError("not a directory: " + base.string());
  LabeledImageDataset ds;
  ds.split = split;
  ds.dataset_id = root.filename().string() + ":" + to_string(split);
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(base)) {
    if (e.is_directory()) class_dirs.push_back(e.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    ds.class_names.push_back(class_dirs[c].filename().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(class_dirs[c])) {
      if (e.is_regular_file() && is_image_name(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      push_decoded(ds, decode_image(read_file_bytes(f.string()), f.string()), static_cast<int>(c), f.string());
    }
  }
  return ds;
}

LabeledImageDataset load_archive(const fs::path& path, Split split) {
  const auto members = tar_unpack(read_file_bytes(path.string()));
  const auto idx_it = members.find("index.json");
  if (idx_it == members.end()) throw SchemaError(path.string() + ": archive has no index.json");
  json index;
  try {
    index = json::parse(idx_it->second.begin(), idx_it->second.end());
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": index.json is not valid JSON: " + e.what());
  }
  LabeledImageDataset ds;
  ds.split = split;
  try {
    ds.dataset_id = index.at("dataset_id").get<std::string>();
    ds.class_names = index.at("class_names").get<std::vector<std::string>>();
    const auto& records = index.at("records");
    for (std::size_t r = 0; r < records.size(); ++r) {
      const auto& rec = records[r];
      if (rec.at("split").get<std::string>() != to_string(split)) continue;
      const auto file = rec.at("file").get<std::string>();
      const int label = rec.at("label").get<int>();
      const auto blob = members.find(file);
      if (blob == members.end()) throw SchemaError(path.string() + ": record " + std::to_string(r) + " references missing member " + file);
      if (label < 0 || label >= ds.class_count()) {
        throw SchemaError(path.string() + ": record " + std::to_string(r) + " (" + file + ") has label " +
                          std::to_string(label) + " outside [0," + std::to_string(ds.class_count()) + ")");
      }
      push_decoded(ds, decode_image(blob->second, file), label, file);
    }
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": malformed index.json: " + e.what());
  }
  return ds;
}

}  // namespace

LabeledImageDataset load_dataset(const std::string& path, DatasetFormat format, Split split) {
  const fs::path p(path);
  if (!fs::exists(p)) throw IoError("dataset path does not exist: " + path);
  LabeledImageDataset ds;
  switch (format) {
    case DatasetFormat::kCifar10: ds = load_cifar(p, false, split); break;
    case DatasetFormat::kCifar100: ds = load_cifar(p, true, split); break;
    case DatasetFormat::kClassFolders: ds = load_folders(p, split); break;
    case DatasetFormat::kArchive: ds = load_archive(p, split); break;
  }
  ds.validate();
  return ds;
}

void save_dataset_archive(const std::string& path, const std::vector<const LabeledImageDataset*>& parts) {
  if (parts.empty()) throw InvalidArgument("save_dataset_archive: nothing to write");
  std::vector<TarEntry> entries;
  json records = json::array();
  for (const auto* ds : parts) {
    if (ds->class_names != parts.front()->class_names) {
      throw InvalidArgument("save_dataset_archive: parts disagree on class names");
    }
    const std::string split = to_string(ds->split);
    for (std::size_t i = 0; i < ds->size(); ++i) {
      const std::string file = split + "/" + std::to_string(i) + ".ppm";
      entries.push_back({file, encode_pnm(ds->images[i], ds->shape)});
      records.push_back({{"file", file}, {"label", ds->labels[i]}, {"split", split}});
    }
  }
  json index = {{"dataset_id", parts.front()->dataset_id}, {"class_names", parts.front()->class_names}, {"records", records}};
  const std::string text = index.dump();
  entries.insert(entries.begin(), TarEntry{"index.json", std::vector<std::uint8_t>(text.begin(), text.end())});
  write_file_bytes_atomic(path, tar_pack(entries));
}

void save_dataset_folders(const std::string& root, const LabeledImageDataset& ds) {
  const fs::path base = fs::path(root) / to_string(ds.split);
  for (int c = 0; c < ds.class_count(); ++c) fs::create_directories(base / ds.class_names[c]);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.png", i);
    write_file_bytes_atomic((base / ds.class_names[ds.labels[i]] / name).string(), encode_png(ds.images[i], ds.shape));
  }
}

LabeledImageDataset build_class_subset(const LabeledImageDataset& ds, const ClassSubsetSpec& spec) {
  if (spec.class_indices.empty()) throw InvalidArgument("class subset: empty class list");
  std::vector<int> classes = spec.class_indices;
  std::sort(classes.begin(), classes.end());
  if (std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
    throw InvalidArgument("class subset: duplicate class index");
  }
  std::vector<int> remap(static_cast<std::size_t>(ds.class_count()), -1);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k] < 0 || classes[k] >= ds.class_count()) {
      throw InvalidArgument("class subset: unknown class " + std::to_string(classes[k]) + " in a " +
                            std::to_string(ds.class_count()) + "-class set");
    }
    remap[static_cast<std::size_t>(classes[k])] = static_cast<int>(k);
  }
  LabeledImageDataset out;
  out.shape = ds.shape;
  out.split = ds.split;
  out.dataset_id = ds.dataset_id + "/subset" + std::to_string(classes.size());
  for (int c : classes) out.class_names.push_back(ds.class_names[static_cast<std::size_t>(c)]);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int nl = remap[static_cast<std::size_t>(ds.labels[i])];
    if (nl < 0) continue;
    out.images.push_back(ds.images[i]);
    out.labels.push_back(nl);
  }
  return out;
}

std::size_t marked_count_for(double wm_ratio, std::size_t class_size) {
  // Half-up rounding; the epsilon absorbs representation error in products
  // such as 0.15 * 10.
  return static_cast<std::size_t>(std::floor(wm_ratio * static_cast<double>(class_size) + 0.5 + 1e-9));
}

MarkingSelection select_marking_targets(const LabeledImageDataset& ds, double wm_ratio, std::uint64_t seed) {
  if (!(wm_ratio > 0.0 && wm_ratio <= 1.0)) {
    throw InvalidArgument("wm_ratio must lie in (0,1], got " + std::to_string(wm_ratio));
  }
  if (ds.split != Split::kTrain) throw InvalidArgument("select_marking_targets: dataset split must be train");
  MarkingSelection sel;
  sel.wm_ratio = wm_ratio;
  sel.seed = seed;
  for (int c = 0; c < ds.class_count(); ++c) {
    auto idx = ds.indices_of_class(c);
    if (idx.empty()) throw InvalidArgument("select_marking_targets: class " + std::to_string(c) + " is empty");
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(sseq);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(marked_count_for(wm_ratio, idx.size()));
    std::sort(idx.begin(), idx.end());
    sel.per_class_indices[c] = std::move(idx);
  }
  return sel;
}

std::string dataset_digest(const LabeledImageDataset& ds) {
  Sha256 h;
  h.update(ds.dataset_id).update(ds.shape.str()).update(to_string(ds.split));
  for (const auto& n : ds.class_names) h.update(n).update(std::string_view("\0", 1));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    h.update(std::to_string(ds.labels[i]));
    h.update(std::span(reinterpret_cast<const std::uint8_t*>(ds.images[i].data()),
                       static_cast<std::size_t>(ds.images[i].size()) * sizeof(float)));
  }
  return h.hex();
}

}  // namespace radmark
