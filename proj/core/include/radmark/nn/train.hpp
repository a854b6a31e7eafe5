#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

#include "radmark/image.hpp"
#include "radmark/nn/network.hpp"

namespace radmark::nn {

// SGD with momentum, decoupled step-decay schedule, L2 weight decay.
struct TrainHyper {
  int epochs = 15;
  int batch_size = 64;
  double learning_rate = 0.02;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<int> lr_milestones{10};  // epochs at which lr *= lr_decay
  double lr_decay = 0.1;
  int warmup_epochs = 1;  // linear ramp up to learning_rate; deeper nets without it can die at lr 0.02
  bool horizontal_flip = false;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const TrainHyper& h);
TrainHyper train_hyper_from_json(const nlohmann::json& j);

struct TrainLog {
  std::vector<double> epoch_loss;
};

// Minimizes mean soft-target cross-entropy between softmax(logits) and the
// rows of `targets` (one-hot rows give ordinary classification; probability
// rows give KL distillation up to a constant).
TrainLog fit(Network& net, std::span<const Image> images, const Eigen::MatrixXd& targets, const TrainHyper& hyper);

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);
Eigen::MatrixXd one_hot(std::span<const int> labels, int classes);

}  // namespace radmark::nn
