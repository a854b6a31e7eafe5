#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "radmark/carriers.hpp"
#include "radmark/error.hpp"

using namespace radmark;

TEST(Carriers, UnitRowsAndDeterminism) {
  const auto a = generate_carriers(10, 128, 42);
  const auto b = generate_carriers(10, 128, 42);
  const auto c = generate_carriers(10, 128, 43);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
  ASSERT_EQ(a.class_count(), 10);
  ASSERT_EQ(a.feature_dim(), 128);
  for (int i = 0; i < 10; ++i) {
    EXPECT_NEAR(a.vectors.row(i).norm(), 1.0, 1e-6);
    for (int j = 0; j < 128; ++j) {
      const double v = a.vectors(i, j);
      EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
    }
  }
}

TEST(Carriers, RejectsBadShapes) {
  EXPECT_THROW(generate_carriers(0, 8, 1), InvalidArgument);
  EXPECT_THROW(generate_carriers(3, 1, 1), InvalidArgument);
}

TEST(CosinePvalue, ClosedFormsInTwoAndThreeDimensions) {
  for (int k = 0; k <= 98; ++k) {
    const double c = (k - 49) / 50.0;
    EXPECT_NEAR(cosine_pvalue(c, 2), std::acos(c) / std::numbers::pi, 1e-9) << c;
    EXPECT_NEAR(cosine_pvalue(c, 3), (1.0 - c) / 2.0, 1e-9) << c;
  }
}

TEST(CosinePvalue, MatchesBoostIbeta) {
  for (int d : {8, 64, 128, 512}) {
    for (double c : {0.0, 0.05, 0.2, 0.5, 0.9, -0.3}) {
      const double tail = 0.5 * boost::math::ibeta((d - 1) / 2.0, 0.5, 1.0 - c * c);
      const double ref = c >= 0 ? tail : 1.0 - tail;
      EXPECT_NEAR(cosine_pvalue(c, d), ref, 1e-12 + 1e-10 * ref) << "d=" << d << " c=" << c;
    }
  }
}

TEST(Carriers, TwoRandomCarriersAreNearlyOrthogonal) {
  const auto c = generate_carriers(2, 512, 7);
  EXPECT_LT(std::abs(c.vectors.row(0).dot(c.vectors.row(1))), 0.2);
}

TEST(CosinePvalue, ComplementSymmetry) {
  for (int d : {2, 3, 8, 64, 512}) {
    for (int k = 0; k <= 98; ++k) {
      const double c = (k - 49) / 50.0;
      EXPECT_NEAR(cosine_pvalue(c, d) + cosine_pvalue(-c, d), 1.0, 1e-12);
    }
  }
}

TEST(CosinePvalue, RejectsOutOfRangeCosine) {
  EXPECT_THROW(cosine_pvalue(1.5, 8), InvalidArgument);
  EXPECT_THROW(cosine_pvalue(0.1, 1), InvalidArgument);
}

TEST(CosinePvalue, BoundaryValues) {
  EXPECT_DOUBLE_EQ(cosine_pvalue(0.0, 64), 0.5);
  EXPECT_DOUBLE_EQ(cosine_pvalue(1.0, 64), 0.0);
  EXPECT_DOUBLE_EQ(cosine_pvalue(-1.0, 64), 1.0);
}

TEST(CosinePvalue, MonotoneDecreasingInCosine) {
  for (int d : {2, 8, 512}) {
    double prev = 1.0;
    for (int k = 0; k <= 200; ++k) {
      const double p = cosine_pvalue(-1.0 + k / 100.0, d);
      EXPECT_LE(p, prev + 1e-15);
      prev = p;
    }
  }
}

TEST(CosinePvalue, Log10AgreesAndSurvivesExtremes) {
  EXPECT_NEAR(cosine_log10_pvalue(0.3, 64), std::log10(cosine_pvalue(0.3, 64)), 1e-10);
  const double deep = cosine_log10_pvalue(0.9, 2048);
  EXPECT_TRUE(std::isfinite(deep));
  EXPECT_LT(deep, -300.0);
}

TEST(Fisher, TwoEqualValuesAgainstChiSquareTail) {
  const std::vector<double> p{0.05, 0.05};
  const double x = -4.0 * std::log(0.05);
  EXPECT_NEAR(combine_pvalues(p), boost::math::gamma_q(2.0, x / 2.0), 1e-12);
  EXPECT_NEAR(combine_pvalues(p), 0.017479, 5e-6);
}

TEST(Fisher, AllOnesGiveOne) {
  const std::vector<double> p(7, 1.0);
  EXPECT_DOUBLE_EQ(combine_pvalues(p), 1.0);
}

TEST(Fisher, RejectsNonPositive) {
  const std::vector<double> p{0.3, 0.0};
  EXPECT_THROW(combine_pvalues(p), InvalidArgument);
}

TEST(Fisher, UniformInputsGiveUniformOutput) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> combined;
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> p(10);
    for (auto& v : p) v = 1.0 - u(rng);
    combined.push_back(combine_pvalues(p));
  }
  std::sort(combined.begin(), combined.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < combined.size(); ++i) {
    const double n = static_cast<double>(combined.size());
    ks = std::max({ks, std::abs((i + 1) / n - combined[i]), std::abs(combined[i] - i / n)});
  }
  EXPECT_LE(ks, 0.02);
}

TEST(Fisher, SingleValueIsIdentity) {
  for (double p : {1e-8, 0.03, 0.5, 0.99}) {
    const std::vector<double> v{p};
    EXPECT_NEAR(combine_pvalues(v), p, 1e-12 * std::max(1.0, p) + 1e-20);
  }
}

TEST(Fisher, Log10PathMatchesLinear) {
  const std::vector<double> p{0.3, 0.04, 0.7, 0.11};
  std::vector<double> l;
  for (double v : p) l.push_back(std::log10(v));
  EXPECT_NEAR(combine_log10_pvalues(l), std::log10(combine_pvalues(p)), 1e-12);
}

TEST(Fisher, HandlesUnderflowingInputs) {
  const std::vector<double> l{-400.0, -350.0, -0.1};
  const double c = combine_log10_pvalues(l);
  EXPECT_TRUE(std::isfinite(c));
  EXPECT_LT(c, -700.0);
}

TEST(MonteCarloNull, MeanAndSpreadOfCosines) {
  const int d = 64;
  const auto s = mc_null_samples(d, 20000, 3);
  double mean = 0, var = 0;
  for (double c : s) mean += c;
  mean /= s.size();
  for (double c : s) var += (c - mean) * (c - mean);
  var /= s.size();
  EXPECT_NEAR(mean, 0.0, 4.0 * std::sqrt(1.0 / d / s.size()));
  EXPECT_NEAR(var, 1.0 / d, 0.05 / d);
}

TEST(MonteCarloNull, ThreeDimensionalMarginalIsUniform) {
  const auto s = mc_null_samples(3, 1000000, 5);
  double mean = 0.0;
  std::size_t above = 0;
  for (double c : s) {
    mean += c;
    above += c >= 0.5;
  }
  EXPECT_NEAR(mean / s.size(), 0.0, 0.005);
  EXPECT_NEAR(static_cast<double>(above) / s.size(), 0.25, 0.002);
  EXPECT_EQ(mc_null_samples(3, 100, 5), mc_null_samples(3, 100, 5));
}

TEST(HypothesisTest, CombinesPerClassValues) {
  const std::vector<double> cos{0.1, 0.3, -0.2};
  const auto r = cosine_hypothesis_test(cos, 64);
  ASSERT_EQ(r.per_class_log10p.size(), 3u);
  std::vector<double> p;
  for (double c : cos) p.push_back(cosine_pvalue(c, 64));
  EXPECT_NEAR(r.combined_log10p, std::log10(combine_pvalues(p)), 1e-10);
  EXPECT_EQ(r.effective_dim, 64);
}
