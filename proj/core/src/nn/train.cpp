#include "radmark/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "radmark/error.hpp"

namespace radmark::nn {

nlohmann::json to_json(const TrainHyper& h) {
  return {{"epochs", h.epochs},
          {"batch_size", h.batch_size},
          {"learning_rate", h.learning_rate},
          {"momentum", h.momentum},
          {"weight_decay", h.weight_decay},
          {"lr_milestones", h.lr_milestones},
          {"lr_decay", h.lr_decay},
          {"warmup_epochs", h.warmup_epochs},
          {"horizontal_flip", h.horizontal_flip},
          {"seed", h.seed}};
}

TrainHyper train_hyper_from_json(const nlohmann::json& j) {
  TrainHyper h;
  h.epochs = j.value("epochs", h.epochs);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.learning_rate = j.value("learning_rate", h.learning_rate);
  h.momentum = j.value("momentum", h.momentum);
  h.weight_decay = j.value("weight_decay", h.weight_decay);
  h.lr_milestones = j.value("lr_milestones", h.lr_milestones);
  h.lr_decay = j.value("lr_decay", h.lr_decay);
  h.warmup_epochs = j.value("warmup_epochs", h.warmup_epochs);
  h.horizontal_flip = j.value("horizontal_flip", h.horizontal_flip);
  h.seed = j.value("seed", h.seed);
  return h;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double mx = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - mx).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

Eigen::MatrixXd one_hot(std::span<const int> labels, int classes) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return t;
}

namespace {

void flip_row(ImageBatch& batch, Eigen::Index r, const ImageShape& shape) {
  for (int c = 0; c < shape.channels; ++c) {
    for (int y = 0; y < shape.height; ++y) {
      auto seg = batch.row(r).segment((static_cast<Eigen::Index>(c) * shape.height + y) * shape.width, shape.width);
      seg.reverseInPlace();
    }
  }
}

}  // namespace

TrainLog fit(Network& net, std::span<const Image> images, const Eigen::MatrixXd& targets, const TrainHyper& hyper) {
  if (images.size() != static_cast<std::size_t>(targets.rows())) throw InvalidArgument("fit: images/targets mismatch");
  if (targets.cols() != net.class_count()) throw InvalidArgument("fit: target width differs from class count");
  if (hyper.batch_size < 1 || hyper.epochs < 0) throw InvalidArgument("fit: invalid batch size or epochs");
  TrainLog log;
  if (images.empty() || hyper.epochs == 0) return log;

  std::mt19937_64 rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);

  auto params = net.params();
  std::vector<Mat> velocity = net.zero_grads();
  double lr = hyper.learning_rate;
  const std::size_t batches_per_epoch = (images.size() + static_cast<std::size_t>(hyper.batch_size) - 1) /
                                        static_cast<std::size_t>(hyper.batch_size);
  const std::size_t warmup_steps = static_cast<std::size_t>(std::max(hyper.warmup_epochs, 0)) * batches_per_epoch;
  std::size_t step = 0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    if (std::find(hyper.lr_milestones.begin(), hyper.lr_milestones.end(), epoch) != hyper.lr_milestones.end()) {
      lr *= hyper.lr_decay;
    }
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(hyper.batch_size), order.size() - start);
      std::span<const std::size_t> idx(order.data() + start, n);
      ImageBatch batch = to_batch(images, idx);
      if (hyper.horizontal_flip) {
        for (Eigen::Index r = 0; r < batch.rows(); ++r) {
          if (coin(rng)) flip_row(batch, r, net.input_shape());
        }
      }
      Eigen::MatrixXd tgt(static_cast<Eigen::Index>(n), targets.cols());
      for (std::size_t i = 0; i < n; ++i) tgt.row(static_cast<Eigen::Index>(i)) = targets.row(static_cast<Eigen::Index>(idx[i]));

      auto grads = net.zero_grads();
      double batch_loss = 0.0;
      net.forward_backward(
          batch,
          [&](const Eigen::MatrixXd& logits) {
            const Eigen::MatrixXd p = softmax_rows(logits);
            for (Eigen::Index r = 0; r < p.rows(); ++r) {
              for (Eigen::Index c = 0; c < p.cols(); ++c) {
                if (tgt(r, c) > 0.0) batch_loss -= tgt(r, c) * std::log(std::max(p(r, c), 1e-300));
              }
            }
            return Eigen::MatrixXd((p - tgt) / static_cast<double>(n));
          },
          grads);
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      loss_sum += batch_loss;
      const double step_lr =
          step < warmup_steps ? lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps) : lr;
      ++step;
      for (std::size_t k = 0; k < params.size(); ++k) {
        Mat& g = grads[k];
        if (params[k]->decay && hyper.weight_decay > 0.0) g += hyper.weight_decay * params[k]->value;
        velocity[k] = hyper.momentum * velocity[k] + g;
        params[k]->value -= step_lr * velocity[k];
      }
    }
    log.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return log;
}

}  // namespace radmark::nn
