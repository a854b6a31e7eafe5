#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radmark/model.hpp"
#include "radmark/verify.hpp"

namespace radmark {

// Victim answers on an out-of-task query pool. Responses are written once
// and never re-queried.
struct TransferSet {
  ImageShape shape;
  std::vector<Image> queries;
  Eigen::MatrixXd responses;  // one probability row per query
  std::vector<std::size_t> pool_indices;
  std::uint64_t seed = 0;
  std::string victim_digest;

  std::size_t size() const { return queries.size(); }
  void validate() const;
};

struct TransferOptions {
  std::size_t query_chunk = 64;
  // When set, completed chunks are persisted here if a query fails, and a
  // matching checkpoint is resumed instead of re-querying.
  std::string checkpoint_path;
};

// Queries the victim once on each of `budget` pool images drawn without
// replacement under `seed`.
TransferSet build_transfer_set(const BlackBoxSuspect& victim, std::span<const Image> pool, const ImageShape& shape,
                               std::size_t budget, std::uint64_t seed, const TransferOptions& options = {});

// Directory with queries.tar (dataset archive, probe split, labels = victim
// top-1) and responses.bin.
void save_transfer_set(const TransferSet& t, const std::string& dir);
TransferSet load_transfer_set(const std::string& dir);

struct SurrogateOptions {
  // Train on the victim's top-1 label instead of its full probability row.
  bool hard_labels = false;
};

// Distills the transfer set into a fresh model of `architecture` by
// minimizing the cross-entropy to the victim rows (KL up to a constant).
TrainedModel train_surrogate(const TransferSet& transfer, const std::string& architecture,
                             const nn::TrainHyper& hyper, const SurrogateOptions& options = {});

double top1_agreement(const Classifier& a, const Classifier& b, std::span<const Image> queries);
// Mean KL(p || q) over rows, q clipped at 1e-12.
double mean_kl(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);

struct SurvivalInputs {
  const WatermarkSecret* secret = nullptr;
  const LabeledImageDataset* marked = nullptr;  // marked training set (pairs and marked probe)
  const LabeledImageDataset* test = nullptr;    // task test split for accuracies
  const FeatureFunction* marker_fn = nullptr;
  std::span<const Image> heldout_queries;       // agreement is measured here
  WhiteBoxOptions whitebox;
  std::uint64_t order_seed = 0;
  double agreement_floor = 0.70;
};

struct SideVerdicts {
  VerificationVerdict whitebox_marked;
  VerificationVerdict blackbox;
  double accuracy = 0.0;
};

struct SurvivalReport {
  SideVerdicts victim;
  SideVerdicts surrogate;
  double accuracy_gap_pp = 0.0;  // victim accuracy minus surrogate accuracy
  double agreement = 0.0;
  // Set when agreement falls below the floor: the surrogate copied too little
  // of the victim for a black-box verdict to mean much.
  bool failure_regime = false;
};

SurvivalReport extraction_survival_report(const TrainedModel& victim, const TrainedModel& surrogate,
                                          const SurvivalInputs& in);

nlohmann::json to_json(const SurvivalReport& r);

}  // namespace radmark
