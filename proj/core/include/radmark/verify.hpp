#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radmark/carriers.hpp"
#include "radmark/dataset.hpp"
#include "radmark/feature_fn.hpp"
#include "radmark/model.hpp"
#include "radmark/secret.hpp"

namespace radmark {

struct WhiteBoxSuspect {
  const FeatureFunction* feature_fn = nullptr;
  LinearClassifierWeights classifier;
  int feature_dim = 0;
  std::string digest;

  void validate() const;
  static WhiteBoxSuspect from_model(const TrainedModel& model);
};

// Probability rows per queried image. Rows must be finite, non-negative and
// sum to 1 within 1e-4.
struct BlackBoxSuspect {
  std::function<Eigen::MatrixXd(std::span<const Image>)> query;
  int class_count = 0;
  std::string digest;

  static BlackBoxSuspect from_model(const Classifier& model, std::string digest = {});
  // Queries and checks the returned rows; throws QueryError on a bad answer.
  Eigen::MatrixXd checked_query(std::span<const Image> batch) const;
};

struct AlignOptions {
  bool allow_ridge = true;
  double ridge_eps = 1e-6;  // relative to the mean diagonal of the normal matrix
};

// Least-squares M with phi_s(x) ~= M phi_m(x) over the probe.
struct AlignmentMap {
  Eigen::MatrixXd matrix;  // d_s x d_m
  double residual_rms = 0.0;
  std::size_t probe_count = 0;
  bool ridge_used = false;
};

AlignmentMap align_features(const FeatureFunction& suspect_fn, const FeatureFunction& marker_fn,
                            std::span<const Image> probe, const AlignOptions& options = {});
// Same fit from precomputed feature rows (N x d_s and N x d_m).
AlignmentMap align_feature_rows(const Eigen::MatrixXd& suspect_rows, const Eigen::MatrixXd& marker_rows,
                                const AlignOptions& options = {});

enum class VerifyMethod { kWhiteboxTestProbe, kWhiteboxMarkedProbe, kBlackbox };
enum class ProbeSource { kTestSet, kMarkedSet };

std::string to_string(VerifyMethod m);
std::string to_string(ProbeSource p);
ProbeSource probe_source_from_string(const std::string& s);

// Where the carrier/weight cosine is measured.
//   kSuspect: cos(M u_c, w_c) in suspect space, effective dimension d_s.
//   kMarker:  cos(u_c, M^T w_c) in marker space, effective dimension d_m.
enum class ComparisonSpace { kSuspect, kMarker };
std::string to_string(ComparisonSpace s);
ComparisonSpace comparison_space_from_string(const std::string& s);

struct WhiteBoxOptions {
  double alpha = 0.05;
  // kMarker compares u_c with M^T w_c. Carriers are drawn independently of
  // the suspect, so the cosine null holds exactly there; kSuspect is the
  // literal cos(M u_c, w_c) and overstates significance for wide suspects.
  ComparisonSpace space = ComparisonSpace::kMarker;
  bool center_weights = false;  // subtract the mean class row before the cosine
  AlignOptions align;
};

struct LossPair {
  int class_id = 0;
  std::size_t index = 0;
  double clean_loss = 0.0;
  double marked_loss = 0.0;
  double difference() const { return clean_loss - marked_loss; }
};

struct VerificationVerdict {
  VerifyMethod method = VerifyMethod::kBlackbox;
  double statistic = 0.0;
  double threshold = 0.0;
  bool decision = false;
  std::optional<HypothesisTestResult> hypothesis;  // white-box detail
  std::vector<LossPair> pairs;                     // black-box detail
  std::size_t samples_used = 0;
  double alignment_residual_rms = 0.0;
  std::string comparison_space;
  std::uint64_t order_seed = 0;
  std::string suspect_digest;
  std::string secret_digest;

  // decision == decide(method, statistic, threshold)
  bool consistent() const;
};

// log10 p <= threshold for white-box methods, statistic > threshold for black-box.
bool decide(VerifyMethod method, double statistic, double threshold);

VerificationVerdict whitebox_verify(const WhiteBoxSuspect& suspect, const WatermarkSecret& secret,
                                    const FeatureFunction& marker_fn, ProbeSource probe_source,
                                    std::span<const Image> probe_data, const WhiteBoxOptions& options = {});

// Marked versions of the secret's samples, taken from the marked dataset in
// secret key order. This is the marked-set probe.
std::vector<Image> marked_probe_images(const WatermarkSecret& secret, const LabeledImageDataset& marked);

struct MarkedPair {
  int class_id = 0;
  std::size_t index = 0;
  Image clean;
  Image marked;
};

// Clean originals from the secret joined with their marked counterparts,
// shuffled by `order_seed`. Sweeps and budgets take prefixes of this order.
std::vector<MarkedPair> marked_pairs(const WatermarkSecret& secret, const LabeledImageDataset& marked,
                                     std::uint64_t order_seed);

// Mean over the first `sample_budget` pairs (all when unset) of the
// cross-entropy on the clean image minus that on the marked image.
VerificationVerdict blackbox_verify(const BlackBoxSuspect& suspect, std::span<const MarkedPair> pairs,
                                    std::optional<std::size_t> sample_budget = std::nullopt);

// Per-pair losses in pair order; each pair is one query of two images, so a
// pair's value never depends on how many pairs are evaluated.
std::vector<LossPair> blackbox_losses(const BlackBoxSuspect& suspect, std::span<const MarkedPair> pairs);

struct SweepPoint {
  std::size_t budget = 0;
  double statistic = 0.0;
  bool decision = false;
};

// One pass over the largest budget; each point is the prefix mean.
std::vector<SweepPoint> blackbox_sample_sweep(const BlackBoxSuspect& suspect, std::span<const MarkedPair> pairs,
                                              std::span<const std::size_t> budgets);
std::vector<SweepPoint> sweep_from_losses(std::span<const LossPair> losses, std::span<const std::size_t> budgets);

// Smallest budget from which every larger swept budget also decides True.
std::optional<std::size_t> smallest_sufficient_budget(std::span<const SweepPoint> sweep);

nlohmann::json to_json(const VerificationVerdict& v, bool with_pairs = false);
nlohmann::json to_json(const AlignmentMap& a);
nlohmann::json to_json(std::span<const SweepPoint> sweep);

}  // namespace radmark
