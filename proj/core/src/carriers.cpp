#include "radmark/carriers.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "radmark/error.hpp"
#include "radmark/special.hpp"

namespace radmark {

CarrierSet generate_carriers(int class_count, int feature_dim, std::uint64_t seed) {
  if (class_count < 1) throw InvalidArgument("generate_carriers: class_count must be >= 1");
  if (feature_dim < 2) throw InvalidArgument("generate_carriers: feature_dim must be >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  CarrierSet out;
  out.seed = seed;
  out.vectors.resize(class_count, feature_dim);
  for (int r = 0; r < class_count; ++r) {
    Eigen::VectorXd v(feature_dim);
    for (int k = 0; k < feature_dim; ++k) v[k] = n01(rng);
    v.normalize();
    out.vectors.row(r) = v.cast<float>().cast<double>().transpose();
  }
  return out;
}

namespace {

void check_cosine_args(double c, int d) {
  if (d < 2) throw InvalidArgument("cosine p-value: dimension must be >= 2");
  if (!(c >= -1.0 && c <= 1.0)) throw InvalidArgument("cosine p-value: cosine outside [-1,1]");
}

// Natural-log upper tail for c >= 0.
double log_upper_tail(double c, int d) {
  const double a = 0.5 * (d - 1);
  const double x = (1.0 - c) * (1.0 + c);
  return std::log(0.5) + special::log_ibeta(a, 0.5, x, c * c);
}

}  // namespace

double cosine_pvalue(double c, int d) {
  check_cosine_args(c, d);
  if (c >= 0.0) return std::exp(log_upper_tail(c, d));
  return 1.0 - std::exp(log_upper_tail(-c, d));
}

double cosine_log10_pvalue(double c, int d) {
  check_cosine_args(c, d);
  const double ln = c >= 0.0 ? log_upper_tail(c, d) : std::log1p(-std::exp(log_upper_tail(-c, d)));
  return ln / std::numbers::ln10;
}

double combine_pvalues(std::span<const double> pvalues) {
  std::vector<double> logs;
  logs.reserve(pvalues.size());
  for (double p : pvalues) {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("combine_pvalues: every p must lie in (0,1]");
    logs.push_back(std::log10(p));
  }
  return std::pow(10.0, combine_log10_pvalues(logs));
}

double combine_log10_pvalues(std::span<const double> log10_pvalues) {
  if (log10_pvalues.empty()) throw InvalidArgument("combine_pvalues: empty input");
  double sum_ln = 0.0;
  for (double l : log10_pvalues) {
    if (!(l <= 0.0)) throw InvalidArgument("combine_pvalues: log10 p must be <= 0");
    sum_ln += l * std::numbers::ln10;
  }
  if (std::isinf(sum_ln)) return -std::numeric_limits<double>::infinity();
  const double chi2 = -2.0 * sum_ln;
  return special::log_chi2_sf_even(chi2, static_cast<int>(log10_pvalues.size())) / std::numbers::ln10;
}

std::vector<double> mc_null_samples(int d, std::size_t count, std::uint64_t seed) {
  if (d < 2) throw InvalidArgument("mc_null_samples: dimension must be >= 2");
  if (count < 1) throw InvalidArgument("mc_null_samples: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double first = n01(rng);
    double sq = first * first;
    for (int k = 1; k < d; ++k) {
      const double g = n01(rng);
      sq += g * g;
    }
    out[i] = first / std::sqrt(sq);
  }
  return out;
}

HypothesisTestResult cosine_hypothesis_test(std::span<const double> cosines, int effective_dim) {
  HypothesisTestResult r;
  r.effective_dim = effective_dim;
  r.per_class_cosines.assign(cosines.begin(), cosines.end());
  for (double c : cosines) r.per_class_log10p.push_back(cosine_log10_pvalue(std::clamp(c, -1.0, 1.0), effective_dim));
  r.combined_log10p = combine_log10_pvalues(r.per_class_log10p);
  return r;
}

}  // namespace radmark
