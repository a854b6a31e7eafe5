#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "radmark/error.hpp"
#include "radmark/manifest.hpp"
#include "radmark/marker.hpp"
#include "radmark/model.hpp"
#include "radmark/verify.hpp"

namespace radmark {

struct RequirementConfig {
  WhiteBoxOptions whitebox;
  std::uint64_t order_seed = 0;
  std::vector<std::size_t> budgets;  // black-box sweep on the marked model
  double max_gap_pp = 5.0;
  std::optional<double> min_psnr_db;
  std::optional<double> max_linf;
  std::vector<std::string> robustness_transforms;
};

struct RequirementDatasets {
  const LabeledImageDataset* marked_train = nullptr;
  const LabeledImageDataset* test = nullptr;
  const FeatureFunction* marker_fn = nullptr;
};

struct MethodVerdicts {
  VerificationVerdict whitebox_test;
  VerificationVerdict whitebox_marked;
  VerificationVerdict blackbox;
  bool any_true() const { return whitebox_test.decision || whitebox_marked.decision || blackbox.decision; }
};

struct UtilityResult {
  double acc_clean = 0.0;  // percent
  double acc_marked = 0.0; // percent
  double gap_pp = 0.0;     // acc_clean - acc_marked
  bool pass = false;
};

struct EffectivenessResult {
  MethodVerdicts verdicts;
  std::vector<SweepPoint> sweep;
  std::optional<std::size_t> smallest_sufficient_budget;
  // Passing needs the black-box and the marked-probe white-box test to decide
  // True; the test-probe verdict is reported alongside.
  bool pass = false;
  bool no_watermark_effect = false;  // no method decided True
};

struct IntegrityEntry {
  std::string name;
  std::string architecture;
  double accuracy = 0.0;
  MethodVerdicts verdicts;
};

struct IntegrityResult {
  std::vector<IntegrityEntry> models;
  bool pass = false;  // every decision on every reference model is False
};

struct StealthResult {
  StealthReport report;
  bool pass = false;
};

struct RobustnessEntry {
  std::string transform;
  VerificationVerdict blackbox;
};

struct RequirementReport {
  UtilityResult utility;
  EffectivenessResult effectiveness;
  IntegrityResult integrity;
  StealthResult stealthiness;
  std::vector<RobustnessEntry> robustness;  // informational, no threshold

  // Every pass flag agrees with the raw numbers it summarizes.
  bool consistent(const RequirementConfig& config) const;
};

struct NamedModel {
  std::string name;
  const TrainedModel* model = nullptr;
};

RequirementReport check_requirements(const TrainedModel& clean_model, const TrainedModel& marked_model,
                                     const std::vector<NamedModel>& reference_models, const WatermarkSecret& secret,
                                     const RequirementDatasets& datasets, const RequirementConfig& config);

MethodVerdicts verify_all_methods(const TrainedModel& suspect, const WatermarkSecret& secret,
                                  const RequirementDatasets& datasets, const RequirementConfig& config);

nlohmann::json to_json(const RequirementReport& r);
nlohmann::json to_json(const MethodVerdicts& v);

// Default sweep budgets: 1, 2, 5, 10, 20, 50, ... capped by and including n.
std::vector<std::size_t> default_budgets(std::size_t n);

// Stage runner failure: names the stage; earlier checkpoints stay valid.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageLog {
  std::string stage;
  bool skipped = false;
};

struct RunSummary {
  std::string output_dir;
  std::string report_dir;
  std::vector<StageLog> stages;
};

using ProgressFn = std::function<void(const std::string& stage, const std::string& status)>;

// Executes data -> models -> per ratio (mark -> train -> verify -> extract)
// -> report. Each stage records a digest of its inputs and outputs in
// checkpoints.json and is skipped when both still match.
RunSummary run_experiment(const ExperimentManifest& manifest, const ProgressFn& progress = {});

// Paths of the artifacts run_experiment writes under the output directory.
struct ExperimentPaths {
  std::string root;
  std::string marker_model() const;
  std::string clean_model() const;
  std::string reference_model(std::size_t i) const;
  std::string ratio_dir(double ratio) const;
  std::string secret(double ratio) const;
  std::string marked_train(double ratio) const;
  std::string marked_model(double ratio) const;
  std::string results(double ratio) const;
  std::string surrogate_model(double ratio) const;
  std::string transfer_dir(double ratio) const;
  std::string extraction(double ratio) const;
  std::string report_dir() const;
};

struct TaskData {
  LabeledImageDataset train;
  LabeledImageDataset test;
  LabeledImageDataset heldout;  // empty unless the task is procedural
};

// Loads or generates the manifest's dataset, applying the class subset.
TaskData load_task_data(const DatasetSpec& spec);

// Out-of-task query pool and held-out agreement queries for extraction.
struct ExtractionPools {
  std::vector<Image> pool;
  std::vector<Image> heldout;
};
ExtractionPools make_extraction_pools(const TaskData& data, const ExtractionSpec& spec);
// The images top-1 agreement is measured on, per spec.agreement_source.
std::span<const Image> agreement_queries(const TaskData& data, const ExtractionPools& pools,
                                         const ExtractionSpec& spec);

}  // namespace radmark
