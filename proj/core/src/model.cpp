#include "radmark/model.hpp"

#include "radmark/architectures.hpp"
#include "radmark/binio.hpp"
#include "radmark/error.hpp"
#include "radmark/profile.hpp"

namespace radmark {

namespace {
constexpr char kModelMagic[4] = {'R', 'M', 'D', 'L'};
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

TrainedModel::TrainedModel(nn::Network net, nlohmann::json manifest)
    : net_(std::move(net)), manifest_(std::move(manifest)), digest_(net_.digest()) {}

Eigen::MatrixXd TrainedModel::features(std::span<const Image> batch) const { return net_.features(to_batch(batch)); }

Eigen::MatrixXd TrainedModel::logits(std::span<const Image> batch) const { return net_.logits(to_batch(batch)); }

Eigen::MatrixXd TrainedModel::probabilities(std::span<const Image> batch) const {
  if (batch.empty()) return Eigen::MatrixXd(0, class_count());
  return nn::softmax_rows(logits(batch));
}

LinearClassifierWeights TrainedModel::classifier_weights() const {
  LinearClassifierWeights w;
  w.weight = net_.head().weight();
  w.bias = net_.head().bias().col(0);
  return w;
}

TrainedModel train_on_targets(std::span<const Image> images, const ImageShape& shape, const Eigen::MatrixXd& targets,
                              const std::string& architecture, const nn::TrainHyper& hyper, nlohmann::json manifest) {
  if (images.empty()) throw InvalidArgument("training set is empty");
  nn::Network net = build_architecture(architecture, shape, static_cast<int>(targets.cols()));
  net.init(hyper.seed);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(shape.channels);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(shape.channels);
  const int plane = shape.plane();
  for (const auto& img : images) {
    for (int c = 0; c < shape.channels; ++c) {
      const auto seg = img.segment(static_cast<Eigen::Index>(c) * plane, plane).cast<double>();
      mean[c] += seg.sum();
      sq[c] += seg.squaredNorm();
    }
  }
  const double count = static_cast<double>(images.size()) * plane;
  mean /= count;
  Eigen::VectorXd stddev = (sq / count - mean.cwiseAbs2()).cwiseMax(1e-12).cwiseSqrt();
  stddev = stddev.cwiseMax(1e-3);
  net.set_normalization(mean, stddev);

  nn::TrainLog log;
  try {
    log = nn::fit(net, images, targets, hyper);
  } catch (const DivergenceError& e) {
    manifest["hyper"] = nn::to_json(hyper);
    throw DivergenceError(std::string(e.what()) + "; manifest: " + manifest.dump());
  }
  manifest["architecture"] = architecture;
  manifest["hyper"] = nn::to_json(hyper);
  manifest["epochs"] = hyper.epochs;
  manifest["epoch_loss"] = log.epoch_loss;
  manifest["feature_dim"] = net.feature_dim();
  manifest["class_count"] = net.class_count();
  manifest["profile"] = to_string(current_profile());
  return TrainedModel(std::move(net), std::move(manifest));
}

TrainedModel train_classifier(const LabeledImageDataset& ds, const std::string& architecture,
                              const nn::TrainHyper& hyper) {
  if (ds.split != Split::kTrain) throw InvalidArgument("train_classifier: dataset split must be train");
  if (ds.size() == 0) throw InvalidArgument("train_classifier: dataset is empty");
  nlohmann::json manifest = {{"dataset_id", ds.dataset_id}, {"dataset_digest", dataset_digest(ds)},
                             {"train_size", ds.size()}};
  TrainedModel model = train_on_targets(ds.images, ds.shape, nn::one_hot(ds.labels, ds.class_count()), architecture,
                                        hyper, std::move(manifest));
  nlohmann::json m = model.manifest();
  m["train_accuracy"] = evaluate_accuracy(model, ds);
  m["chance_accuracy"] = 1.0 / ds.class_count();
  return TrainedModel(model.network(), std::move(m));
}

Eigen::MatrixXd predict_probabilities(const Classifier& model, std::span<const Image> batch) {
  return model.probabilities(batch);
}

std::vector<int> predict_labels(const Classifier& model, std::span<const Image> batch) {
  std::vector<int> out;
  out.reserve(batch.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t s = 0; s < batch.size(); s += kChunk) {
    const auto part = batch.subspan(s, std::min(kChunk, batch.size() - s));
    const Eigen::MatrixXd p = model.probabilities(part);
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      Eigen::Index arg = 0;
      p.row(r).maxCoeff(&arg);
      out.push_back(static_cast<int>(arg));
    }
  }
  return out;
}

double evaluate_accuracy(const Classifier& model, const LabeledImageDataset& ds) {
  if (ds.size() == 0) throw InvalidArgument("evaluate_accuracy: empty dataset");
  const auto pred = predict_labels(model, ds.images);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == ds.labels[i];
  return static_cast<double>(hit) / static_cast<double>(ds.size());
}

void save_model(const TrainedModel& model, const std::string& path) {
  const auto& net = model.network();
  ByteWriter w;
  w.raw(std::string_view(kModelMagic, 4));
  w.u32(kModelVersion);
  w.section(net.config().dump());
  const auto weights = net.flat_weights();
  ByteWriter blob;
  blob.u64(weights.size());
  for (double v : weights) blob.f64(v);
  w.section(blob.bytes());
  ByteWriter norm;
  norm.u32(static_cast<std::uint32_t>(net.norm_mean().size()));
  for (Eigen::Index c = 0; c < net.norm_mean().size(); ++c) norm.f64(net.norm_mean()[c]);
  for (Eigen::Index c = 0; c < net.norm_std().size(); ++c) norm.f64(net.norm_std()[c]);
  w.section(norm.bytes());
  w.section(model.manifest().dump());
  w.section(model.weights_digest());
  write_file_bytes_atomic(path, w.bytes());
}

TrainedModel load_model(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kModelMagic)) throw CorruptionError(path + ": not a model container");
  const auto version = r.u32();
  if (version != kModelVersion) {
    throw UnsupportedSchemaError(path + ": unsupported model container version " + std::to_string(version));
  }
  nn::Network net = [&] {
    try {
      return nn::Network::from_config(nlohmann::json::parse(r.section_string()));
    } catch (const nlohmann::json::exception& e) {
      throw CorruptionError(path + ": bad model config: " + e.what());
    }
  }();
  {
    ByteReader blob(r.section());
    const auto n = blob.u64();
    if (n > blob.remaining() / 8) throw CorruptionError(path + ": weight blob truncated");
    std::vector<double> weights(static_cast<std::size_t>(n));
    for (auto& v : weights) v = blob.f64();
    net.set_flat_weights(weights);
  }
  {
    ByteReader norm(r.section());
    const auto c = norm.u32();
    Eigen::VectorXd mean(c), stddev(c);
    for (std::uint32_t i = 0; i < c; ++i) mean[i] = norm.f64();
    for (std::uint32_t i = 0; i < c; ++i) stddev[i] = norm.f64();
    net.set_normalization(mean, stddev);
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(r.section_string());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(path + ": bad manifest: " + e.what());
  }
  const std::string digest = r.section_string();
  TrainedModel model(std::move(net), std::move(manifest));
  if (model.weights_digest() != digest) throw CorruptionError(path + ": weights digest mismatch");
  return model;
}

}  // namespace radmark
