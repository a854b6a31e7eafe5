#pragma once

#include <Eigen/Dense>

#include "radmark/image.hpp"

namespace radmark {

// A differentiable map from flattened images to feature vectors. Both
// operations must be safe to call concurrently on a const instance.
class FeatureFunction {
 public:
  virtual ~FeatureFunction() = default;

  virtual int input_dim() const = 0;
  virtual int feature_dim() const = 0;
  // One feature row per image row.
  virtual Eigen::MatrixXd features(const ImageBatch& batch) const = 0;
  // Row i holds d/dx_i of <grad_features.row(i), phi(x_i)>.
  virtual ImageBatch feature_vjp(const ImageBatch& batch, const Eigen::MatrixXd& grad_features) const = 0;
};

// phi(x) = x.
class IdentityFeatures final : public FeatureFunction {
 public:
  explicit IdentityFeatures(int dim) : dim_(dim) {}
  int input_dim() const override { return dim_; }
  int feature_dim() const override { return dim_; }
  Eigen::MatrixXd features(const ImageBatch& batch) const override { return batch; }
  ImageBatch feature_vjp(const ImageBatch&, const Eigen::MatrixXd& g) const override { return g; }

 private:
  int dim_;
};

// phi(x) = A * base(x), e.g. a rotated copy of another extractor.
class LinearlyMappedFeatures final : public FeatureFunction {
 public:
  LinearlyMappedFeatures(const FeatureFunction& base, Eigen::MatrixXd map) : base_(base), map_(std::move(map)) {}
  int input_dim() const override { return base_.input_dim(); }
  int feature_dim() const override { return static_cast<int>(map_.rows()); }
  Eigen::MatrixXd features(const ImageBatch& batch) const override { return base_.features(batch) * map_.transpose(); }
  ImageBatch feature_vjp(const ImageBatch& batch, const Eigen::MatrixXd& g) const override {
    return base_.feature_vjp(batch, g * map_);
  }

 private:
  const FeatureFunction& base_;
  Eigen::MatrixXd map_;
};

}  // namespace radmark
