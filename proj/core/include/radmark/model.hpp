#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <span>
#include <string>

#include "radmark/dataset.hpp"
#include "radmark/feature_fn.hpp"
#include "radmark/nn/network.hpp"
#include "radmark/nn/train.hpp"

namespace radmark {

// Terminal linear layer of a classifier: logits = W * phi(x) + b.
struct LinearClassifierWeights {
  Eigen::MatrixXd weight;  // class_count x feature_dim
  Eigen::VectorXd bias;
};

// Anything that maps images to class-probability rows.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual int class_count() const = 0;
  virtual Eigen::MatrixXd probabilities(std::span<const Image> batch) const = 0;
};

class TrainedModel final : public FeatureFunction, public Classifier {
 public:
  TrainedModel(nn::Network net, nlohmann::json manifest);

  const nn::Network& network() const { return net_; }
  const std::string& architecture() const { return net_.architecture(); }
  const std::string& weights_digest() const { return digest_; }
  const nlohmann::json& manifest() const { return manifest_; }

  int input_dim() const override { return net_.input_dim(); }
  int feature_dim() const override { return net_.feature_dim(); }
  int class_count() const override { return net_.class_count(); }

  Eigen::MatrixXd features(const ImageBatch& batch) const override { return net_.features(batch); }
  ImageBatch feature_vjp(const ImageBatch& batch, const Eigen::MatrixXd& g) const override {
    return net_.feature_vjp(batch, g);
  }
  Eigen::MatrixXd features(std::span<const Image> batch) const;
  Eigen::MatrixXd logits(std::span<const Image> batch) const;
  Eigen::MatrixXd probabilities(std::span<const Image> batch) const override;
  LinearClassifierWeights classifier_weights() const;

 private:
  nn::Network net_;
  nlohmann::json manifest_;
  std::string digest_;
};

// Trains `architecture` on a train split. The manifest records every
// hyperparameter, the dataset identity and the achieved training accuracy.
TrainedModel train_classifier(const LabeledImageDataset& ds, const std::string& architecture,
                              const nn::TrainHyper& hyper);

// Builds a model from a network and per-channel stats of `images`, then runs
// `fit` against the given target rows. Shared by classifier and surrogate
// training.
TrainedModel train_on_targets(std::span<const Image> images, const ImageShape& shape, const Eigen::MatrixXd& targets,
                              const std::string& architecture, const nn::TrainHyper& hyper, nlohmann::json manifest);

Eigen::MatrixXd predict_probabilities(const Classifier& model, std::span<const Image> batch);
double evaluate_accuracy(const Classifier& model, const LabeledImageDataset& ds);
std::vector<int> predict_labels(const Classifier& model, std::span<const Image> batch);

// Checkpoint container: "RMDL", version, then length-prefixed sections for
// the architecture config (JSON), weights (f64), normalization stats,
// manifest (JSON) and digest (hex).
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace radmark
