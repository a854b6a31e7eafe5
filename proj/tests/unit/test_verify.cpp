#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "radmark/carriers.hpp"
#include "radmark/error.hpp"
#include "radmark/verify.hpp"

using namespace radmark;

namespace {

constexpr int kDm = 8;
constexpr int kDs = 12;
constexpr int kClasses = 4;

std::vector<Image> random_images(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<Image> out;
  for (int i = 0; i < n; ++i) {
    Image img(d);
    for (int k = 0; k < d; ++k) img[k] = u(rng);
    out.push_back(img);
  }
  return out;
}

Eigen::MatrixXd gaussian(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

WatermarkSecret toy_secret(std::uint64_t seed) {
  WatermarkSecret s;
  s.carriers = generate_carriers(kClasses, kDm, seed);
  s.image_shape = {1, 1, kDm};
  return s;
}

struct Fixture {
  IdentityFeatures marker{kDm};
  // Orthonormal columns, so both comparison spaces see the same cosines.
  Eigen::MatrixXd map = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(kDs, kDm, 5)).householderQ() *
                        Eigen::MatrixXd::Identity(kDs, kDm);
  LinearlyMappedFeatures suspect_fn{marker, map};
  std::vector<Image> probe = random_images(60, kDm, 6);

  WhiteBoxSuspect suspect(const Eigen::MatrixXd& weight) const {
    WhiteBoxSuspect s;
    s.feature_fn = &suspect_fn;
    s.classifier.weight = weight;
    s.classifier.bias = Eigen::VectorXd::Zero(weight.rows());
    s.feature_dim = kDs;
    s.digest = "suspect";
    return s;
  }
};

// Softmax suspect whose logit for the true class rises with the pixel sum.
BlackBoxSuspect sum_suspect(double gain) {
  BlackBoxSuspect s;
  s.class_count = 3;
  s.query = [gain](std::span<const Image> b) {
    Eigen::MatrixXd p(static_cast<Eigen::Index>(b.size()), 3);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double z = gain * b[i].cast<double>().sum();
      Eigen::Vector3d e(std::exp(z), 1.0, 1.0);
      p.row(static_cast<Eigen::Index>(i)) = (e / e.sum()).transpose();
    }
    return p;
  };
  return s;
}

std::vector<MarkedPair> shifted_pairs(int n, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<MarkedPair> out;
  const auto imgs = random_images(n, 4, seed);
  for (int i = 0; i < n; ++i) {
    Image m = imgs[static_cast<std::size_t>(i)];
    m.array() += static_cast<float>(shift + noise(rng));
    out.push_back({0, static_cast<std::size_t>(i), imgs[static_cast<std::size_t>(i)], m});
  }
  return out;
}

}  // namespace

TEST(Alignment, RecoversExactLinearMap) {
  Fixture f;
  const auto a = align_features(f.suspect_fn, f.marker, f.probe);
  EXPECT_FALSE(a.ridge_used);
  EXPECT_EQ(a.probe_count, 60u);
  EXPECT_LT((a.matrix - f.map).norm(), 1e-9);
  EXPECT_LT(a.residual_rms, 1e-10);
  EXPECT_EQ(to_json(a)["rows"], kDs);
}

TEST(Alignment, RankDeficientProbe) {
  Fixture f;
  std::vector<Image> few(f.probe.begin(), f.probe.begin() + 3);
  AlignOptions strict;
  strict.allow_ridge = false;
  EXPECT_THROW(align_features(f.suspect_fn, f.marker, few, strict), SingularityError);
  const auto a = align_features(f.suspect_fn, f.marker, few);
  EXPECT_TRUE(a.ridge_used);
  EXPECT_TRUE(a.matrix.allFinite());
  EXPECT_THROW(align_features(f.suspect_fn, f.marker, std::span<const Image>{}), InvalidArgument);
}

TEST(WhiteBox, DetectsAlignedCarriers) {
  Fixture f;
  const auto secret = toy_secret(1);
  const Eigen::MatrixXd w = secret.carriers.vectors * f.map.transpose() + 0.05 * gaussian(kClasses, kDs, 2);
  for (auto space : {ComparisonSpace::kSuspect, ComparisonSpace::kMarker}) {
    WhiteBoxOptions opt;
    opt.space = space;
    const auto v = whitebox_verify(f.suspect(w), secret, f.marker, ProbeSource::kTestSet, f.probe, opt);
    EXPECT_TRUE(v.decision) << to_string(space);
    EXPECT_TRUE(v.consistent());
    EXPECT_EQ(v.method, VerifyMethod::kWhiteboxTestProbe);
    ASSERT_TRUE(v.hypothesis);
    for (double c : v.hypothesis->per_class_cosines) EXPECT_GT(c, 0.9);
    EXPECT_EQ(v.hypothesis->effective_dim, space == ComparisonSpace::kSuspect ? kDs : kDm);
    EXPECT_NEAR(v.threshold, std::log10(0.05), 1e-15);
    EXPECT_EQ(v.secret_digest, secret_digest(secret));
  }
}

TEST(WhiteBox, InvariantToRotatedSuspectFeatures) {
  Fixture f;
  const auto secret = toy_secret(3);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(kDs, kDs, 4)).householderQ();
  LinearlyMappedFeatures rotated(f.suspect_fn, q);
  const Eigen::MatrixXd w = secret.carriers.vectors * f.map.transpose() + 0.5 * gaussian(kClasses, kDs, 6);
  auto s1 = f.suspect(w);
  auto s2 = f.suspect(w * q.transpose());
  s2.feature_fn = &rotated;
  const auto a = whitebox_verify(s1, secret, f.marker, ProbeSource::kMarkedSet, f.probe);
  const auto b = whitebox_verify(s2, secret, f.marker, ProbeSource::kMarkedSet, f.probe);
  EXPECT_EQ(a.method, VerifyMethod::kWhiteboxMarkedProbe);
  EXPECT_NEAR(a.statistic, b.statistic, 1e-6 * std::abs(a.statistic));
}

TEST(WhiteBox, MarkerSpaceNullIsCalibrated) {
  Fixture f;
  const int trials = 400;
  int rejections = 0;
  WhiteBoxOptions opt;
  opt.space = ComparisonSpace::kMarker;
  for (int t = 0; t < trials; ++t) {
    const auto secret = toy_secret(1000 + static_cast<std::uint64_t>(t));
    const auto v = whitebox_verify(f.suspect(gaussian(kClasses, kDs, 50000 + static_cast<std::uint64_t>(t))), secret,
                                   f.marker, ProbeSource::kTestSet, f.probe, opt);
    rejections += v.decision ? 1 : 0;
  }
  // Binomial(400, 0.05): mean 20, sd 4.4.
  EXPECT_GE(rejections, 6);
  EXPECT_LE(rejections, 34);
}

TEST(WhiteBox, ShapeErrors) {
  Fixture f;
  const auto secret = toy_secret(1);
  EXPECT_THROW(whitebox_verify(f.suspect(gaussian(kClasses + 1, kDs, 1)), secret, f.marker, ProbeSource::kTestSet,
                               f.probe),
               InvalidArgument);
  EXPECT_THROW(whitebox_verify(f.suspect(gaussian(kClasses, kDs - 1, 1)), secret, f.marker, ProbeSource::kTestSet,
                               f.probe),
               InvalidArgument);
  WhiteBoxOptions bad;
  bad.alpha = 1.0;
  EXPECT_THROW(whitebox_verify(f.suspect(gaussian(kClasses, kDs, 1)), secret, f.marker, ProbeSource::kTestSet, f.probe,
                               bad),
               InvalidArgument);
}

TEST(Decide, DirectionAndNaN) {
  EXPECT_TRUE(decide(VerifyMethod::kBlackbox, 0.1, 0.0));
  EXPECT_FALSE(decide(VerifyMethod::kBlackbox, 0.0, 0.0));
  EXPECT_TRUE(decide(VerifyMethod::kWhiteboxTestProbe, -2.0, -1.3));
  EXPECT_TRUE(decide(VerifyMethod::kWhiteboxMarkedProbe, -1.3, -1.3));
  EXPECT_FALSE(decide(VerifyMethod::kWhiteboxTestProbe, -1.0, -1.3));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(decide(VerifyMethod::kBlackbox, nan, 0.0));
  EXPECT_FALSE(decide(VerifyMethod::kWhiteboxTestProbe, nan, -1.3));
}

TEST(BlackBox, DetectsShiftAndIgnoresNoShift) {
  const auto marked = shifted_pairs(200, 0.05, 1);
  const auto v = blackbox_verify(sum_suspect(1.0), marked);
  EXPECT_TRUE(v.decision);
  EXPECT_GT(v.statistic, 0.0);
  EXPECT_EQ(v.samples_used, 200u);
  EXPECT_TRUE(v.consistent());
  const auto flat = blackbox_verify(sum_suspect(0.0), marked);
  EXPECT_EQ(flat.statistic, 0.0);
  EXPECT_FALSE(flat.decision);
}

TEST(BlackBox, LossesMatchClosedForm) {
  const auto pairs = shifted_pairs(5, 0.1, 2);
  const auto losses = blackbox_losses(sum_suspect(0.7), pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto loss = [](const Image& x) {
      const double z = 0.7 * x.cast<double>().sum();
      return -std::log(std::exp(z) / (std::exp(z) + 2.0));
    };
    EXPECT_NEAR(losses[i].clean_loss, loss(pairs[i].clean), 1e-12);
    EXPECT_NEAR(losses[i].marked_loss, loss(pairs[i].marked), 1e-12);
  }
}

TEST(BlackBox, SweepPrefixIdentityIsBitExact) {
  const auto pairs = shifted_pairs(120, 0.01, 3);
  const auto suspect = sum_suspect(2.0);
  const std::vector<std::size_t> budgets{1, 2, 5, 10, 20, 50, 100, 120};
  const auto sweep = blackbox_sample_sweep(suspect, pairs, budgets);
  ASSERT_EQ(sweep.size(), budgets.size());
  for (const auto& p : sweep) {
    const auto v = blackbox_verify(suspect, pairs, p.budget);
    EXPECT_EQ(v.statistic, p.statistic) << p.budget;
    EXPECT_EQ(v.decision, p.decision);
  }
}

TEST(BlackBox, SmallestSufficientBudget) {
  std::vector<SweepPoint> s{{1, 0.1, true}, {2, -0.1, false}, {5, 0.2, true}, {10, 0.3, true}};
  EXPECT_EQ(smallest_sufficient_budget(s), 5u);
  s.back().decision = false;
  EXPECT_FALSE(smallest_sufficient_budget(s).has_value());
  std::vector<SweepPoint> all{{1, 0.1, true}, {3, 0.1, true}};
  EXPECT_EQ(smallest_sufficient_budget(all), 1u);
  EXPECT_FALSE(smallest_sufficient_budget(std::span<const SweepPoint>{}).has_value());
}

TEST(BlackBox, ZeroProbabilityIsClipped) {
  BlackBoxSuspect s;
  s.class_count = 2;
  s.query = [](std::span<const Image> b) {
    Eigen::MatrixXd p(static_cast<Eigen::Index>(b.size()), 2);
    p.col(0).setZero();
    p.col(1).setOnes();
    return p;
  };
  const auto pairs = shifted_pairs(3, 0.1, 4);
  const auto v = blackbox_verify(s, pairs);
  EXPECT_NEAR(v.pairs[0].clean_loss, -std::log(1e-12), 1e-9);
  EXPECT_EQ(v.statistic, 0.0);
  EXPECT_FALSE(v.decision);
}

TEST(BlackBox, MalformedAnswersAreQueryErrors) {
  const auto pairs = shifted_pairs(2, 0.1, 5);
  auto make = [](std::function<Eigen::MatrixXd(std::span<const Image>)> f) {
    BlackBoxSuspect s;
    s.class_count = 3;
    s.query = std::move(f);
    return s;
  };
  const auto wrong_shape = make([](std::span<const Image>) { return Eigen::MatrixXd::Constant(1, 3, 1.0 / 3); });
  const auto not_dist = make([](std::span<const Image> b) {
    return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(b.size()), 3, 0.5);
  });
  const auto negative = make([](std::span<const Image> b) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(b.size()), 3, 0.6);
    p.col(2).setConstant(-0.2);
    return p;
  });
  const auto throws = make([](std::span<const Image>) -> Eigen::MatrixXd { throw std::runtime_error("offline"); });
  for (const auto* s : {&wrong_shape, &not_dist, &negative, &throws}) {
    EXPECT_THROW(blackbox_verify(*s, pairs), QueryError);
  }
  EXPECT_THROW(blackbox_verify(sum_suspect(1.0), pairs, 3), InvalidArgument);
  EXPECT_THROW(blackbox_verify(sum_suspect(1.0), std::span<const MarkedPair>{}), InvalidArgument);
}

TEST(MarkedPairs, ShuffleIsSeededPermutation) {
  WatermarkSecret s;
  LabeledImageDataset marked;
  marked.shape = {1, 1, 2};
  marked.class_names = {"a", "b"};
  for (std::size_t i = 0; i < 30; ++i) {
    Image img = Image::Constant(2, static_cast<float>(i) / 255.0f);
    marked.images.push_back(img);
    marked.labels.push_back(static_cast<int>(i % 2));
    if (i % 3 == 0) s.clean_originals.emplace(WatermarkSecret::SampleKey{static_cast<int>(i % 2), i}, Image::Zero(2));
  }
  const auto a = marked_pairs(s, marked, 7);
  const auto b = marked_pairs(s, marked, 7);
  const auto c = marked_pairs(s, marked, 8);
  ASSERT_EQ(a.size(), 10u);
  std::vector<std::size_t> ia, ib, ic;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ia.push_back(a[k].index);
    ib.push_back(b[k].index);
    ic.push_back(c[k].index);
    EXPECT_EQ(a[k].marked, marked.images[a[k].index]);
  }
  EXPECT_EQ(ia, ib);
  EXPECT_NE(ia, ic);
  EXPECT_EQ(std::set<std::size_t>(ia.begin(), ia.end()), std::set<std::size_t>(ic.begin(), ic.end()));
  marked.labels[0] = 1;
  EXPECT_THROW(marked_pairs(s, marked, 7), InvalidArgument);
}

TEST(VerdictJson, CarriesDetail) {
  const auto pairs = shifted_pairs(4, 0.1, 6);
  auto v = blackbox_verify(sum_suspect(1.0), pairs);
  v.order_seed = 42;
  const auto j = to_json(v, true);
  EXPECT_EQ(j["method"], "blackbox");
  EXPECT_EQ(j["detail"]["order_seed"], 42);
  EXPECT_EQ(j["detail"]["pairs"].size(), 4u);
  EXPECT_FALSE(to_json(v).at("detail").contains("pairs"));
}
