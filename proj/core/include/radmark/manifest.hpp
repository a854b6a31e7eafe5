#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "radmark/dataset.hpp"
#include "radmark/embed_params.hpp"
#include "radmark/nn/train.hpp"
#include "radmark/toy_data.hpp"
#include "radmark/verify.hpp"

namespace radmark {

inline constexpr int kManifestSchemaVersion = 1;

struct DatasetSpec {
  // "toy" generates the procedural task; any other format reads `train_path`
  // (and `test_path`, defaulting to the same location with the test split).
  std::string format = "toy";
  std::string train_path;
  std::string test_path;
  ToyTaskConfig toy;
  std::optional<ClassSubsetSpec> subset;
};

struct ModelSpec {
  std::string architecture = "desk_cnn";
  nn::TrainHyper hyper;
};

struct ExtractionSpec {
  bool enabled = false;
  ModelSpec surrogate;
  std::size_t pool_size = 20000;  // natural-statistics images added to held-out toy classes
  std::size_t budget = 20000;     // victim queries
  std::size_t heldout_queries = 1000;  // pool images kept out of the transfer set
  // Where top-1 agreement is measured: "test_split" (task test images, never
  // queried) or "pool_holdout" (the held-out pool images above).
  std::string agreement_source = "test_split";
  bool hard_labels = false;
  double agreement_floor = 0.70;
  std::uint64_t seed = 0;
};

struct VerifySpec {
  double alpha = 0.05;
  std::vector<ProbeSource> probe_sources{ProbeSource::kTestSet, ProbeSource::kMarkedSet};
  std::vector<std::size_t> budgets;  // empty: 1, 2, 5, 10, 20, 50, ... up to the pair count
  std::uint64_t order_seed = 0;
  ComparisonSpace space = ComparisonSpace::kMarker;
  bool center_weights = false;
};

struct RequirementSpec {
  double max_gap_pp = 5.0;
  std::optional<double> min_psnr_db;
  std::optional<double> max_linf;
};

struct RobustnessSpec {
  bool enabled = false;
  std::vector<std::string> transforms;  // e.g. "rotate:5", "rescale:0.75", "crop:28", "jpeg:50"
};

struct ExperimentManifest {
  int schema_version = kManifestSchemaVersion;
  std::string name = "experiment";
  DatasetSpec dataset;
  std::vector<double> wm_ratios{0.2};
  std::uint64_t selection_seed = 0;
  std::uint64_t carrier_seed = 0;
  EmbedParams embed;
  ModelSpec marker;
  ModelSpec adversary;
  std::vector<ModelSpec> references;
  ExtractionSpec extraction;
  VerifySpec verify;
  RequirementSpec requirements;
  RobustnessSpec robustness;
  std::string output_dir = "radmark-out";

  // Throws SchemaError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const ExperimentManifest& m);
ExperimentManifest manifest_from_json(const nlohmann::json& j);
ExperimentManifest load_manifest(const std::string& path);
void save_manifest(const ExperimentManifest& m, const std::string& path);
std::string manifest_digest(const ExperimentManifest& m);

nlohmann::json to_json(const ToyTaskConfig& c);
ToyTaskConfig toy_config_from_json(const nlohmann::json& j);

}  // namespace radmark
