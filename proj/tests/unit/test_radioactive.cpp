#include <gtest/gtest.h>

#include "radmark/carriers.hpp"
#include "radmark/dataset.hpp"
#include "radmark/marker.hpp"
#include "radmark/model.hpp"
#include "radmark/nn/train.hpp"
#include "radmark/toy_data.hpp"
#include "radmark/verify.hpp"

using namespace radmark;

namespace {

// Multinomial logistic regression on fixed features, full-batch gradient descent.
Eigen::MatrixXd fit_linear_head(const Eigen::MatrixXd& f, const std::vector<int>& labels, int classes) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(classes, f.cols());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(f.rows(), classes);
  for (Eigen::Index i = 0; i < f.rows(); ++i) t(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  for (int it = 0; it < 1500; ++it) {
    const Eigen::MatrixXd p = nn::softmax_rows(f * w.transpose());
    w -= 0.5 * ((p - t).transpose() * f / static_cast<double>(f.rows()) + 1e-4 * w);
  }
  return w;
}

}  // namespace

// The mechanism in its cleanest form: a classifier fit on frozen marker
// features of the marked set tilts its class weights towards the carriers,
// while one fit on the clean set does not.
TEST(Radioactive, LinearHeadOnMarkerFeatures) {
  ToyTaskConfig cfg;
  cfg.classes = 8;
  cfg.heldout_classes = 0;
  cfg.train_per_class = 100;
  cfg.test_per_class = 50;
  cfg.heldout_per_class = 0;
  cfg.shape = {3, 16, 16};
  cfg.seed = 4;
  const auto task = make_toy_task(cfg);
  nn::TrainHyper h;
  h.epochs = 6;
  h.seed = 5;
  const auto marker = train_classifier(task.train, "desk_cnn", h);

  const auto sel = select_marking_targets(task.train, 0.2, 6);
  const auto carriers = generate_carriers(cfg.classes, marker.feature_dim(), 7);
  EmbedParams p;
  p.steps = 200;
  const auto res = mark_dataset(task.train, sel, carriers, marker, p, marker.weights_digest());
  const auto probe = marked_probe_images(res.secret, res.marked);

  double stat[2][2];
  for (int marked = 0; marked < 2; ++marked) {
    const auto& ds = marked ? res.marked : task.train;
    WhiteBoxSuspect s;
    s.feature_fn = &marker;
    s.classifier.weight = fit_linear_head(marker.features(to_batch(ds.images)), ds.labels, cfg.classes);
    s.classifier.bias = Eigen::VectorXd::Zero(cfg.classes);
    s.feature_dim = marker.feature_dim();
    s.digest = marked ? "marked-head" : "clean-head";
    stat[marked][0] = whitebox_verify(s, res.secret, marker, ProbeSource::kTestSet, task.test.images).statistic;
    stat[marked][1] = whitebox_verify(s, res.secret, marker, ProbeSource::kMarkedSet, probe).statistic;
  }
  SCOPED_TRACE("clean head " + std::to_string(stat[0][0]) + " / " + std::to_string(stat[0][1]) + ", marked head " +
               std::to_string(stat[1][0]) + " / " + std::to_string(stat[1][1]));
  EXPECT_GT(stat[0][0], std::log10(0.05));
  EXPECT_GT(stat[0][1], std::log10(0.05));
  EXPECT_LT(stat[1][0], -3.0);
  EXPECT_LT(stat[1][1], -3.0);
}
