#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace radmark::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Shape3 {
  int c = 0, h = 1, w = 1;
  int size() const { return c * h * w; }
  bool operator==(const Shape3&) const = default;
};

// Activations: one row per channel, columns run over (sample, y, x).
struct Tensor {
  int n = 0, c = 0, h = 1, w = 1;
  Mat data;

  Shape3 shape() const { return {c, h, w}; }
  int plane() const { return h * w; }
};

struct Param {
  Mat value;
  bool decay = true;  // subject to weight decay
};

// Everything a layer needs to replay its forward pass backwards.
struct Cache {
  Shape3 in_shape;
  int n = 0;
  Mat saved;
  std::vector<std::int32_t> index;
  std::vector<Cache> children;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Shape3 output_shape(const Shape3& in) const = 0;
  // `cache` may be null for inference-only passes.
  virtual Tensor forward(const Tensor& x, Cache* cache) const = 0;
  // Returns the gradient w.r.t. the layer input. If `grads` is non-empty it
  // must hold one matrix per parameter (params() order) and is accumulated.
  virtual Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const = 0;

  virtual std::vector<Param*> params() { return {}; }
  std::vector<const Param*> cparams() const;
  virtual void init(std::mt19937_64& /*rng*/) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual nlohmann::json config() const = 0;
};

class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel = 3);

  std::string kind() const override { return "conv2d"; }
  Shape3 output_shape(const Shape3& in) const override;
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(std::mt19937_64& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  nlohmann::json config() const override;

 private:
  int in_, out_, k_, pad_;
  Param weight_;  // out x (in*k*k)
  Param bias_;    // out x 1
};

class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features);

  std::string kind() const override { return "linear"; }
  Shape3 output_shape(const Shape3& in) const override;
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(std::mt19937_64& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }
  nlohmann::json config() const override;

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  const Mat& weight() const { return weight_.value; }
  const Mat& bias() const { return bias_.value; }

 private:
  int in_, out_;
  Param weight_;  // out x in
  Param bias_;    // out x 1
};

class Relu final : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Shape3 output_shape(const Shape3& in) const override { return in; }
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  nlohmann::json config() const override { return {{"kind", kind()}}; }
};

class Tanh final : public Layer {
 public:
  std::string kind() const override { return "tanh"; }
  Shape3 output_shape(const Shape3& in) const override { return in; }
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Tanh>(*this); }
  nlohmann::json config() const override { return {{"kind", kind()}}; }
};

// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
class MaxPool2 final : public Layer {
 public:
  std::string kind() const override { return "maxpool2"; }
  Shape3 output_shape(const Shape3& in) const override { return {in.c, in.h / 2, in.w / 2}; }
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2>(*this); }
  nlohmann::json config() const override { return {{"kind", kind()}}; }
};

class GlobalAvgPool final : public Layer {
 public:
  std::string kind() const override { return "gap"; }
  Shape3 output_shape(const Shape3& in) const override { return {in.c, 1, 1}; }
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }
  nlohmann::json config() const override { return {{"kind", kind()}}; }
};

// (c, h, w) -> (c*h*w, 1, 1), CHW order.
class Flatten final : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Shape3 output_shape(const Shape3& in) const override { return {in.size(), 1, 1}; }
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
  nlohmann::json config() const override { return {{"kind", kind()}}; }
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  template <typename L, typename... Args>
  Sequential& add(Args&&... args) {
    layers_.push_back(std::make_unique<L>(std::forward<Args>(args)...));
    return *this;
  }
  Sequential& add_layer(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }

  std::string kind() const override { return "sequential"; }
  Shape3 output_shape(const Shape3& in) const override;
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::vector<Param*> params() override;
  void init(std::mt19937_64& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Sequential>(*this); }
  nlohmann::json config() const override;

  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// y = x + f(x); f must preserve the shape.
class Residual final : public Layer {
 public:
  explicit Residual(Sequential inner) : inner_(std::move(inner)) {}

  std::string kind() const override { return "residual"; }
  Shape3 output_shape(const Shape3& in) const override;
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::vector<Param*> params() override { return inner_.params(); }
  // Zeroes the branch's last weight and bias so each unit starts as the identity.
  void init(std::mt19937_64& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Residual>(*this); }
  nlohmann::json config() const override;

 private:
  Sequential inner_;
};

// y = concat_channels(x, f(x)), the densely-connected growth step.
class DenseConcat final : public Layer {
 public:
  explicit DenseConcat(Sequential inner) : inner_(std::move(inner)) {}

  std::string kind() const override { return "dense_concat"; }
  Shape3 output_shape(const Shape3& in) const override;
  Tensor forward(const Tensor& x, Cache* cache) const override;
  Tensor backward(const Tensor& grad_out, const Cache& cache, std::span<Mat> grads) const override;
  std::vector<Param*> params() override { return inner_.params(); }
  void init(std::mt19937_64& rng) override { inner_.init(rng); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<DenseConcat>(*this); }
  nlohmann::json config() const override;

 private:
  Sequential inner_;
};

std::unique_ptr<Layer> layer_from_config(const nlohmann::json& cfg);

}  // namespace radmark::nn
