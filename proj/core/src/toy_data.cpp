#include "radmark/toy_data.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "radmark/error.hpp"

namespace radmark {
namespace {

struct Grating {
  double fx, fy;  // cycles per image
  double phase;
  Eigen::Vector3d color;
  double amplitude;
};

std::vector<Grating> random_gratings(std::mt19937_64& rng, int count, double fmin, double fmax, double spectral_alpha) {
  std::uniform_real_distribution<double> uf(fmin, fmax);
  std::uniform_real_distribution<double> ua(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> un(0.0, 1.0);
  std::vector<Grating> out;
  for (int i = 0; i < count; ++i) {
    Grating g;
    const double f = uf(rng);
    const double theta = ua(rng);
    g.fx = f * std::cos(theta);
    g.fy = f * std::sin(theta);
    g.phase = ua(rng);
    g.color = Eigen::Vector3d(un(rng), un(rng), un(rng)).normalized();
    g.amplitude = 1.0 / std::pow(f, spectral_alpha);
    out.push_back(g);
  }
  return out;
}

// Accumulates gratings translated by (dx, dy) pixels into a CHW buffer.
void render(const std::vector<Grating>& gs, const ImageShape& shape, double gain, double dx, double dy,
            Eigen::VectorXd& acc) {
  const int H = shape.height, W = shape.width, C = shape.channels;
  for (const auto& g : gs) {
    const double wx = 2.0 * std::numbers::pi * g.fx / W;
    const double wy = 2.0 * std::numbers::pi * g.fy / H;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double v = gain * g.amplitude * std::sin(wx * (x - dx) + wy * (y - dy) + g.phase);
        for (int c = 0; c < C; ++c) acc[(c * H + y) * W + x] += v * (C == 3 ? g.color[c] : 1.0);
      }
    }
  }
}

Image finish(const Eigen::VectorXd& acc) {
  Image img(acc.size());
  for (Eigen::Index i = 0; i < acc.size(); ++i) {
    img[i] = quantize_8bit(static_cast<float>(0.5 + 0.5 * std::tanh(acc[i])));
  }
  return img;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::seed_seq s{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                  static_cast<std::uint32_t>(b >> 32)};
  std::mt19937_64 r(s);
  return r();
}

void fill_class(LabeledImageDataset& ds, const std::vector<Grating>& proto, int label, int count,
                const ToyTaskConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> shift(-3.0, 3.0);
  std::uniform_real_distribution<double> gain(0.6, 1.0);
  std::normal_distribution<double> noise(0.0, cfg.pixel_noise);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(cfg.shape.size());
    render(proto, cfg.shape, gain(rng), shift(rng), shift(rng), acc);
    render(random_gratings(rng, 6, 1.0, 6.0, 0.5), cfg.shape, cfg.clutter, 0.0, 0.0, acc);
    for (Eigen::Index k = 0; k < acc.size(); ++k) acc[k] += noise(rng);
    ds.images.push_back(finish(acc));
    ds.labels.push_back(label);
  }
}

}  // namespace

ToyTask make_toy_task(const ToyTaskConfig& cfg) {
  if (cfg.classes < 1 || cfg.train_per_class < 1) throw InvalidArgument("toy task needs classes and samples");
  std::mt19937_64 proto_rng(mix(cfg.seed, 0x70726f746fULL));
  std::vector<std::vector<Grating>> protos;
  for (int c = 0; c < cfg.classes + cfg.heldout_classes; ++c) {
    protos.push_back(random_gratings(proto_rng, 5, 1.0, 4.0, 0.3));
  }

  ToyTask task;
  const std::string id = "toy" + std::to_string(cfg.classes) + "-s" + std::to_string(cfg.seed);
  auto init = [&](LabeledImageDataset& ds, Split split, int classes, int offset) {
    ds.dataset_id = id + (offset ? "-heldout" : "");
    ds.shape = cfg.shape;
    ds.split = split;
    for (int c = 0; c < classes; ++c) ds.class_names.push_back("pattern_" + std::to_string(c + offset));
  };
  init(task.train, Split::kTrain, cfg.classes, 0);
  init(task.test, Split::kTest, cfg.classes, 0);
  init(task.heldout, Split::kTrain, cfg.heldout_classes, cfg.classes);

  std::mt19937_64 train_rng(mix(cfg.seed, 1));
  std::mt19937_64 test_rng(mix(cfg.seed, 2));
  std::mt19937_64 held_rng(mix(cfg.seed, 3));
  for (int c = 0; c < cfg.classes; ++c) {
    fill_class(task.train, protos[c], c, cfg.train_per_class, cfg, train_rng);
    fill_class(task.test, protos[c], c, cfg.test_per_class, cfg, test_rng);
  }
  for (int c = 0; c < cfg.heldout_classes; ++c) {
    fill_class(task.heldout, protos[cfg.classes + c], c, cfg.heldout_per_class, cfg, held_rng);
  }
  return task;
}

LabeledImageDataset make_blob_dataset(int per_class, const ImageShape& shape, double separation, std::uint64_t seed,
                                      Split split) {
  std::mt19937_64 rng(mix(seed, 0x626c6f62ULL));
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd dir(shape.size());
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = n01(rng);
  dir.normalize();
  std::mt19937_64 srng(mix(seed, split == Split::kTrain ? 11 : 12));
  LabeledImageDataset ds;
  ds.dataset_id = "blobs-s" + std::to_string(seed);
  ds.shape = shape;
  ds.split = split;
  ds.class_names = {"neg", "pos"};
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    Eigen::VectorXd v(shape.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = 0.5 + 0.08 * n01(srng);
    v += (label ? 0.5 : -0.5) * separation * dir;
    Image img = v.cast<float>().cwiseMax(0.0f).cwiseMin(1.0f);
    ds.images.push_back(quantize_8bit(img));
    ds.labels.push_back(label);
  }
  return ds;
}

std::vector<Image> make_natural_pool(int count, const ImageShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 0x706f6f6cULL));
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(shape.size());
    render(random_gratings(rng, 16, 0.7, 10.0, 1.0), shape, 0.8, 0.0, 0.0, acc);
    out.push_back(finish(acc));
  }
  return out;
}

}  // namespace radmark
