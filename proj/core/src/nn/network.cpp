#include "radmark/nn/network.hpp"

#include <random>

#include "radmark/digest.hpp"
#include "radmark/error.hpp"

namespace radmark::nn {

namespace {
constexpr Eigen::Index kChunk = 128;
}

Eigen::MatrixXd to_rows(const Mat& features_by_column) { return features_by_column.transpose(); }

Network::Network(std::string architecture, ImageShape input, Sequential body, int class_count)
    : arch_(std::move(architecture)),
      input_(input),
      body_(std::move(body)),
      head_(body_.output_shape({input.channels, input.height, input.width}).size(), class_count),
      feature_dim_(head_.in_features()),
      mean_(Eigen::VectorXd::Zero(input.channels)),
      std_(Eigen::VectorXd::Ones(input.channels)) {
  const Shape3 out = body_.output_shape({input.channels, input.height, input.width});
  if (out.h != 1 || out.w != 1) throw InvalidArgument("network body must end in flat features");
  if (class_count < 1) throw InvalidArgument("network needs at least one class");
}

void Network::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  body_.init(rng);
  head_.init(rng);
}

void Network::set_normalization(Eigen::VectorXd mean, Eigen::VectorXd stddev) {
  if (mean.size() != input_.channels || stddev.size() != input_.channels) {
    throw InvalidArgument("normalization stats must have one entry per channel");
  }
  if ((stddev.array() <= 0.0).any()) throw InvalidArgument("normalization stddev must be positive");
  mean_ = std::move(mean);
  std_ = std::move(stddev);
}

Tensor Network::to_tensor(const ImageBatch& batch) const {
  if (batch.cols() != input_.size()) {
    throw InvalidArgument("batch has " + std::to_string(batch.cols()) + " values per image, model expects " +
                          input_.str());
  }
  const int C = input_.channels, HW = input_.plane();
  Tensor t;
  t.n = static_cast<int>(batch.rows());
  t.c = C;
  t.h = input_.height;
  t.w = input_.width;
  t.data.resize(C, static_cast<Eigen::Index>(t.n) * HW);
  for (int s = 0; s < t.n; ++s) {
    for (int c = 0; c < C; ++c) {
      t.data.row(c).segment(static_cast<Eigen::Index>(s) * HW, HW) =
          (batch.row(s).segment(static_cast<Eigen::Index>(c) * HW, HW).array() - mean_[c]) / std_[c];
    }
  }
  return t;
}

ImageBatch Network::to_image_grad(const Tensor& g) const {
  const int C = input_.channels, HW = input_.plane();
  ImageBatch out(g.n, input_.size());
  for (int s = 0; s < g.n; ++s) {
    for (int c = 0; c < C; ++c) {
      out.row(s).segment(static_cast<Eigen::Index>(c) * HW, HW) =
          g.data.row(c).segment(static_cast<Eigen::Index>(s) * HW, HW) / std_[c];
    }
  }
  return out;
}

Eigen::MatrixXd Network::features_chunk(const ImageBatch& batch) const {
  return body_.forward(to_tensor(batch), nullptr).data.transpose();
}

Eigen::MatrixXd Network::features(const ImageBatch& batch) const {
  if (batch.rows() <= kChunk) return features_chunk(batch);
  Eigen::MatrixXd out(batch.rows(), feature_dim_);
  for (Eigen::Index s = 0; s < batch.rows(); s += kChunk) {
    const Eigen::Index n = std::min(kChunk, batch.rows() - s);
    out.middleRows(s, n) = features_chunk(batch.middleRows(s, n));
  }
  return out;
}

ImageBatch Network::feature_vjp(const ImageBatch& batch, const Eigen::MatrixXd& grad_features) const {
  if (grad_features.rows() != batch.rows() || grad_features.cols() != feature_dim_) {
    throw InvalidArgument("feature_vjp: gradient shape mismatch");
  }
  ImageBatch out(batch.rows(), batch.cols());
  for (Eigen::Index s = 0; s < batch.rows(); s += kChunk) {
    const Eigen::Index n = std::min(kChunk, batch.rows() - s);
    Cache cache;
    const Tensor f = body_.forward(to_tensor(batch.middleRows(s, n)), &cache);
    Tensor g;
    g.n = f.n;
    g.c = f.c;
    g.data = grad_features.middleRows(s, n).transpose();
    out.middleRows(s, n) = to_image_grad(body_.backward(g, cache, {}));
  }
  return out;
}

Eigen::MatrixXd Network::logits(const ImageBatch& batch) const {
  const Eigen::MatrixXd f = features(batch);
  Eigen::MatrixXd z = f * head_.weight().transpose();
  z.rowwise() += head_.bias().col(0).transpose();
  return z;
}

std::vector<Param*> Network::params() {
  auto out = body_.params();
  auto h = head_.params();
  out.insert(out.end(), h.begin(), h.end());
  return out;
}

std::vector<const Param*> Network::params() const {
  auto mut = const_cast<Network*>(this)->params();
  return {mut.begin(), mut.end()};
}

std::vector<Mat> Network::zero_grads() const {
  std::vector<Mat> g;
  for (const auto* p : params()) g.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  return g;
}

nlohmann::json Network::config() const {
  return {{"architecture", arch_},
          {"input", {input_.channels, input_.height, input_.width}},
          {"classes", class_count()},
          {"body", body_.config()}};
}

Network Network::from_config(const nlohmann::json& cfg) {
  auto body = layer_from_config(cfg.at("body"));
  auto* seq = dynamic_cast<Sequential*>(body.get());
  if (!seq) throw SchemaError("model config: body must be sequential");
  const auto in = cfg.at("input").get<std::vector<int>>();
  if (in.size() != 3) throw SchemaError("model config: input must be [c,h,w]");
  return Network(cfg.at("architecture").get<std::string>(), ImageShape{in[0], in[1], in[2]}, std::move(*seq),
                 cfg.at("classes").get<int>());
}

std::vector<double> Network::flat_weights() const {
  std::vector<double> out;
  for (const auto* p : params()) out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

void Network::set_flat_weights(std::span<const double> w) {
  std::size_t pos = 0;
  for (auto* p : params()) {
    const auto n = static_cast<std::size_t>(p->value.size());
    if (pos + n > w.size()) throw CorruptionError("weight blob shorter than model parameters");
    std::copy(w.begin() + static_cast<std::ptrdiff_t>(pos), w.begin() + static_cast<std::ptrdiff_t>(pos + n),
              p->value.data());
    pos += n;
  }
  if (pos != w.size()) throw CorruptionError("weight blob longer than model parameters");
}

std::string Network::digest() const {
  Sha256 h;
  h.update(config().dump());
  for (double v : flat_weights()) h.update_f64(v);
  for (Eigen::Index c = 0; c < mean_.size(); ++c) h.update_f64(mean_[c]).update_f64(std_[c]);
  return h.hex();
}

}  // namespace radmark::nn
