#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>

#include "radmark/feature_fn.hpp"
#include "radmark/image.hpp"
#include "radmark/nn/layers.hpp"

namespace radmark::nn {

// Feature extractor ("body") followed by a terminal linear classifier
// ("head"). Per-channel input normalization is part of the model.
class Network final : public FeatureFunction {
 public:
  Network(std::string architecture, ImageShape input, Sequential body, int class_count);

  const std::string& architecture() const { return arch_; }
  const ImageShape& input_shape() const { return input_; }
  int input_dim() const override { return input_.size(); }
  int feature_dim() const override { return feature_dim_; }
  int class_count() const { return head_.out_features(); }

  void init(std::uint64_t seed);
  void set_normalization(Eigen::VectorXd mean, Eigen::VectorXd stddev);
  const Eigen::VectorXd& norm_mean() const { return mean_; }
  const Eigen::VectorXd& norm_std() const { return std_; }

  Eigen::MatrixXd features(const ImageBatch& batch) const override;
  ImageBatch feature_vjp(const ImageBatch& batch, const Eigen::MatrixXd& grad_features) const override;
  Eigen::MatrixXd logits(const ImageBatch& batch) const;

  const Linear& head() const { return head_; }

  // Training support: one forward/backward over a batch. `grad_logits` maps
  // logits (N x m) to dL/dlogits; parameter gradients are accumulated into
  // `grads` (params() order). Returns the logits.
  template <typename GradFn>
  Eigen::MatrixXd forward_backward(const ImageBatch& batch, GradFn&& grad_logits, std::vector<Mat>& grads);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::vector<Mat> zero_grads() const;

  nlohmann::json config() const;
  static Network from_config(const nlohmann::json& cfg);
  std::vector<double> flat_weights() const;
  void set_flat_weights(std::span<const double> w);
  std::string digest() const;

 private:
  Tensor to_tensor(const ImageBatch& batch) const;
  ImageBatch to_image_grad(const Tensor& g) const;
  Eigen::MatrixXd features_chunk(const ImageBatch& batch) const;

  std::string arch_;
  ImageShape input_;
  Sequential body_;
  Linear head_;
  int feature_dim_;
  Eigen::VectorXd mean_, std_;
};

Eigen::MatrixXd to_rows(const Mat& features_by_column);

template <typename GradFn>
Eigen::MatrixXd Network::forward_backward(const ImageBatch& batch, GradFn&& grad_logits, std::vector<Mat>& grads) {
  Cache body_cache, head_cache;
  const Tensor x = to_tensor(batch);
  const Tensor f = body_.forward(x, &body_cache);
  const Tensor z = head_.forward(f, &head_cache);
  Eigen::MatrixXd logits = z.data.transpose();
  const Eigen::MatrixXd gl = grad_logits(logits);
  Tensor gz;
  gz.n = z.n;
  gz.c = z.c;
  gz.data = gl.transpose();
  const std::size_t nb = body_.cparams().size();
  std::span<Mat> all(grads);
  const Tensor gf = head_.backward(gz, head_cache, all.subspan(nb));
  body_.backward(gf, body_cache, all.subspan(0, nb));
  return logits;
}

}  // namespace radmark::nn
