#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace radmark {

// One secret unit direction per class in marker feature space. Entries are
// rounded to float precision so the secret file stores them exactly.
struct CarrierSet {
  Eigen::MatrixXd vectors;  // class_count x feature_dim
  std::uint64_t seed = 0;

  int class_count() const { return static_cast<int>(vectors.rows()); }
  int feature_dim() const { return static_cast<int>(vectors.cols()); }
  bool operator==(const CarrierSet& o) const { return seed == o.seed && vectors == o.vectors; }
};

// Rows i.i.d. uniform on S^{d-1}: isotropic Gaussian draws, normalized.
CarrierSet generate_carriers(int class_count, int feature_dim, std::uint64_t seed);

// P(cos >= c) for the cosine between a fixed vector and a uniform random unit
// vector in R^d:  1/2 * I_{1-c^2}((d-1)/2, 1/2) for c >= 0, mirrored for c < 0.
double cosine_pvalue(double c, int d);
// Same tail, evaluated in log space so that extreme values do not underflow.
double cosine_log10_pvalue(double c, int d);

// Fisher's method; returns the combined p-value.
double combine_pvalues(std::span<const double> pvalues);
// Fisher's method on log10 p-values, returning log10 of the combined value.
double combine_log10_pvalues(std::span<const double> log10_pvalues);

// Cosines between the first axis and `count` independent uniform unit vectors.
std::vector<double> mc_null_samples(int d, std::size_t count, std::uint64_t seed);

struct HypothesisTestResult {
  std::vector<double> per_class_cosines;
  std::vector<double> per_class_log10p;
  double combined_log10p = 0.0;
  int effective_dim = 0;
};

HypothesisTestResult cosine_hypothesis_test(std::span<const double> cosines, int effective_dim);

}  // namespace radmark
