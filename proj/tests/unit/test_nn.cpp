#include <gtest/gtest.h>

#include <random>

#include "radmark/architectures.hpp"
#include "radmark/error.hpp"
#include "radmark/nn/layers.hpp"
#include "radmark/nn/network.hpp"
#include "radmark/nn/train.hpp"

using namespace radmark;
using namespace radmark::nn;

namespace {

Tensor random_tensor(int n, Shape3 s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Tensor t;
  t.n = n;
  t.c = s.c;
  t.h = s.h;
  t.w = s.w;
  t.data.resize(s.c, static_cast<Eigen::Index>(n) * s.h * s.w);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = g(rng);
  return t;
}

double probe_loss(const Layer& layer, const Tensor& x, const Mat& r) {
  return (layer.forward(x, nullptr).data.array() * r.array()).sum();
}

// Central-difference check of input and parameter gradients against
// loss = <forward(x), r>.
void check_layer(Layer& layer, Shape3 in, int n = 2, double tol = 1e-5) {
  std::mt19937_64 rng(17);
  layer.init(rng);
  // Jitter so zero-initialised parameters (residual branch tails) still carry gradient.
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (auto* p : layer.params()) p->value = p->value.unaryExpr([&](double v) { return v + jitter(rng); });
  const Tensor x = random_tensor(n, in, 3);
  Cache cache;
  const Tensor y = layer.forward(x, &cache);
  ASSERT_EQ(y.shape(), layer.output_shape(in));
  const Mat r = random_tensor(n, y.shape(), 4).data;
  Tensor gy = y;
  gy.data = r;
  std::vector<Mat> grads;
  for (auto* p : layer.params()) grads.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  const Tensor gx = layer.backward(gy, cache, grads);
  ASSERT_EQ(gx.data.rows(), x.data.rows());
  ASSERT_EQ(gx.data.cols(), x.data.cols());

  const double h = 1e-5;
  for (Eigen::Index i = 0; i < x.data.size(); i += std::max<Eigen::Index>(1, x.data.size() / 40)) {
    Tensor a = x, b = x;
    a.data.data()[i] += h;
    b.data.data()[i] -= h;
    const double fd = (probe_loss(layer, a, r) - probe_loss(layer, b, r)) / (2 * h);
    EXPECT_NEAR(gx.data.data()[i], fd, tol * std::max(1.0, std::abs(fd))) << layer.kind() << " input " << i;
  }
  auto params = layer.params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    Mat& v = params[k]->value;
    for (Eigen::Index i = 0; i < v.size(); i += std::max<Eigen::Index>(1, v.size() / 25)) {
      const double keep = v.data()[i];
      v.data()[i] = keep + h;
      const double lp = probe_loss(layer, x, r);
      v.data()[i] = keep - h;
      const double lm = probe_loss(layer, x, r);
      v.data()[i] = keep;
      const double fd = (lp - lm) / (2 * h);
      EXPECT_NEAR(grads[k].data()[i], fd, tol * std::max(1.0, std::abs(fd))) << layer.kind() << " param " << k;
    }
  }
}

}  // namespace

TEST(Layers, Conv2dGradient) {
  Conv2d conv(3, 5);
  check_layer(conv, {3, 6, 5});
}

TEST(Layers, LinearGradient) {
  Linear lin(7, 4);
  check_layer(lin, {7, 1, 1}, 3);
}

TEST(Layers, ActivationsAndPoolingGradients) {
  Relu relu;
  check_layer(relu, {2, 4, 4});
  Tanh tanh_layer;
  check_layer(tanh_layer, {2, 4, 4});
  MaxPool2 pool;
  check_layer(pool, {3, 6, 4});
  GlobalAvgPool gap;
  check_layer(gap, {3, 5, 5});
  Flatten flat;
  check_layer(flat, {3, 2, 3});
}

TEST(Layers, CompositeGradients) {
  Sequential inner;
  inner.add<Conv2d>(4, 4).add<Tanh>();
  Residual res(inner);
  check_layer(res, {4, 4, 4});
  Sequential grow;
  grow.add<Conv2d>(3, 2).add<Tanh>();
  DenseConcat dense(grow);
  check_layer(dense, {3, 4, 4});
  EXPECT_EQ(dense.output_shape({3, 4, 4}), (Shape3{5, 4, 4}));
  Sequential seq;
  seq.add<Conv2d>(2, 3).add<Tanh>().add<MaxPool2>().add<Flatten>().add<Linear>(12, 5);
  check_layer(seq, {2, 4, 4});
}

TEST(Layers, ResidualStartsAsIdentity) {
  Sequential inner;
  inner.add<Conv2d>(3, 3).add<Relu>().add<Conv2d>(3, 3);
  Residual res(inner);
  std::mt19937_64 rng(2);
  res.init(rng);
  const Tensor x = random_tensor(2, {3, 4, 4}, 9);
  EXPECT_EQ(res.forward(x, nullptr).data, x.data);
}

TEST(Layers, ConfigRoundTrip) {
  Sequential seq;
  Sequential inner;
  inner.add<Conv2d>(3, 3).add<Relu>();
  seq.add<Conv2d>(2, 3).add_layer(std::make_unique<Residual>(inner)).add<GlobalAvgPool>().add<Flatten>();
  const auto cfg = seq.config();
  const auto back = layer_from_config(cfg);
  EXPECT_EQ(back->config(), cfg);
  EXPECT_THROW(layer_from_config({{"kind", "nope"}}), Error);
}

class ArchitectureTest : public ::testing::TestWithParam<std::string> {};

TEST_P(ArchitectureTest, FeatureVjpMatchesFiniteDifferences) {
  const ImageShape shape{3, 8, 8};
  auto net = build_architecture(GetParam(), shape, 5);
  net.init(11);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  ImageBatch x(2, shape.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  const Eigen::MatrixXd f = net.features(x);
  ASSERT_EQ(f.rows(), 2);
  ASSERT_EQ(f.cols(), net.feature_dim());
  std::normal_distribution<double> g;
  Eigen::MatrixXd r(2, net.feature_dim());
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = g(rng);
  const ImageBatch vjp = net.feature_vjp(x, r);
  const double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); i += 7) {
    ImageBatch a = x, b = x;
    a(1, i) += h;
    b(1, i) -= h;
    const double fd = ((net.features(a) - net.features(b)).array() * r.array()).sum() / (2 * h);
    worst = std::max(worst, std::abs(fd - vjp(1, i)) / std::max(1.0, std::abs(fd)));
  }
  EXPECT_LT(worst, 1e-4) << GetParam();
}

TEST_P(ArchitectureTest, ConfigAndWeightsRoundTrip) {
  auto net = build_architecture(GetParam(), {3, 8, 8}, 4);
  net.init(3);
  auto copy = Network::from_config(net.config());
  copy.set_flat_weights(net.flat_weights());
  EXPECT_EQ(copy.digest(), net.digest());
  ImageBatch x = ImageBatch::Constant(1, 3 * 64, 0.3);
  EXPECT_EQ(copy.logits(x), net.logits(x));
}

INSTANTIATE_TEST_SUITE_P(All, ArchitectureTest, ::testing::ValuesIn(architecture_tags()));

TEST(Architectures, RejectsUnknownAndBadShapes) {
  EXPECT_THROW(build_architecture("vgg99", {3, 8, 8}, 2), InvalidArgument);
  EXPECT_THROW(build_architecture("desk_cnn", {3, 6, 6}, 2), InvalidArgument);
}

TEST(Network, InitIsSeeded) {
  auto a = build_architecture("dense", {3, 8, 8}, 3);
  auto b = a;
  auto c = a;
  a.init(1);
  b.init(1);
  c.init(2);
  EXPECT_EQ(a.flat_weights(), b.flat_weights());
  EXPECT_NE(a.flat_weights(), c.flat_weights());
}

TEST(Train, SoftmaxRowsAreDistributions) {
  Eigen::MatrixXd z(2, 3);
  z << 1000.0, 0.0, -1000.0, 0.1, 0.2, 0.3;
  const auto p = softmax_rows(z);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-15);
  EXPECT_NEAR(p(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(p.row(1).sum(), 1.0, 1e-15);
}

TEST(Train, FitLowersLossOnSeparableData) {
  const ImageShape shape{1, 4, 4};
  auto net = build_architecture("tiny_smooth", shape, 2);
  net.init(4);
  std::vector<Image> images;
  Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(64, 2);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.0f, 0.4f);
  for (int i = 0; i < 64; ++i) {
    Image img(16);
    for (int k = 0; k < 16; ++k) img[k] = u(rng) + (i % 2 ? 0.5f : 0.0f);
    images.push_back(img);
    targets(i, i % 2) = 1.0;
  }
  TrainHyper h;
  h.epochs = 8;
  h.batch_size = 16;
  h.learning_rate = 0.05;
  h.seed = 3;
  const auto log = fit(net, images, targets, h);
  ASSERT_EQ(log.epoch_loss.size(), 8u);
  EXPECT_LT(log.epoch_loss.back(), 0.5 * log.epoch_loss.front());
  EXPECT_EQ(train_hyper_from_json(to_json(h)).epochs, 8);
}
