#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "radmark/binio.hpp"
#include "radmark/harness.hpp"
#include "radmark/report.hpp"

using namespace radmark;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ExperimentManifest tiny_manifest(const std::string& dir) {
  ExperimentManifest m;
  m.name = "tiny";
  m.dataset.toy.classes = 3;
  m.dataset.toy.heldout_classes = 2;
  m.dataset.toy.train_per_class = 20;
  m.dataset.toy.test_per_class = 10;
  m.dataset.toy.heldout_per_class = 10;
  m.dataset.toy.shape = {3, 8, 8};
  m.wm_ratios = {0.2};
  m.embed.steps = 5;
  for (auto* spec : {&m.marker, &m.adversary}) {
    spec->architecture = "tiny_smooth";
    spec->hyper.epochs = 2;
    spec->hyper.batch_size = 16;
  }
  m.adversary.hyper.seed = 1;
  ModelSpec ref;
  ref.architecture = "dense";
  ref.hyper.epochs = 1;
  ref.hyper.batch_size = 16;
  m.references = {ref};
  m.extraction.enabled = true;
  m.extraction.surrogate = m.adversary;
  m.extraction.pool_size = 40;
  m.extraction.budget = 40;
  m.extraction.heldout_queries = 8;
  m.output_dir = dir;
  return m;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("radmark_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::size_t skipped(const RunSummary& s) {
  std::size_t n = 0;
  for (const auto& st : s.stages) n += st.skipped ? 1 : 0;
  return n;
}

}  // namespace

TEST(Manifest, JsonRoundTripAndDigest) {
  auto m = tiny_manifest("out");
  m.embed.linf_budget = 0.05;
  m.requirements.min_psnr_db = 30.0;
  m.robustness.enabled = true;
  m.robustness.transforms = {"rotate:5", "jpeg:50"};
  m.dataset.subset = ClassSubsetSpec{"cifar100", {1, 2, 3}};
  const auto j = to_json(m);
  const auto back = manifest_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(manifest_digest(back), manifest_digest(m));
  auto other = m;
  other.selection_seed = 1;
  EXPECT_NE(manifest_digest(other), manifest_digest(m));
}

TEST(Manifest, FileRoundTrip) {
  const auto dir = scratch("manifest");
  fs::create_directories(dir);
  const auto path = (dir / "m.json").string();
  const auto m = tiny_manifest("out");
  save_manifest(m, path);
  EXPECT_EQ(manifest_digest(load_manifest(path)), manifest_digest(m));
  write_file_text_atomic(path, "{ not json");
  EXPECT_THROW(load_manifest(path), SchemaError);
}

TEST(Manifest, RejectsUnknownFieldsAndBadValues) {
  auto j = to_json(tiny_manifest("out"));
  auto unknown = j;
  unknown["verify"]["alpah"] = 0.01;
  EXPECT_THROW(manifest_from_json(unknown), SchemaError);
  auto version = j;
  version["schema_version"] = 2;
  EXPECT_THROW(manifest_from_json(version), UnsupportedSchemaError);
  auto ratio = j;
  ratio["wm_ratios"] = {0.0};
  EXPECT_THROW(manifest_from_json(ratio), SchemaError);
  auto arch = j;
  arch["adversary"]["architecture"] = "vgg";
  EXPECT_THROW(manifest_from_json(arch), SchemaError);
  auto budgets = j;
  budgets["verify"]["budgets"] = {10, 5};
  EXPECT_THROW(manifest_from_json(budgets), SchemaError);
  auto alpha = j;
  alpha["verify"]["alpha"] = 1.5;
  EXPECT_THROW(manifest_from_json(alpha), SchemaError);
  auto source = j;
  source["extraction"]["agreement_source"] = "train_split";
  EXPECT_THROW(manifest_from_json(source), SchemaError);
}

TEST(Harness, DefaultBudgets) {
  EXPECT_EQ(default_budgets(1), (std::vector<std::size_t>{1}));
  EXPECT_EQ(default_budgets(10), (std::vector<std::size_t>{1, 2, 5, 10}));
  EXPECT_EQ(default_budgets(640), (std::vector<std::size_t>{1, 2, 5, 10, 20, 50, 100, 200, 500, 640}));
  EXPECT_TRUE(default_budgets(0).empty());
}

TEST(Harness, RunResumesAndRerunsInvalidatedStages) {
  const auto dir = scratch("run");
  auto m = tiny_manifest(dir.string());
  std::vector<std::string> events;
  const auto first = run_experiment(m, [&](const std::string& s, const std::string& st) { events.push_back(s + ":" + st); });
  EXPECT_EQ(skipped(first), 0u);
  const std::vector<std::string> expect{"marker", "clean", "reference_0", "mark/ratio_0.2", "train/ratio_0.2",
                                        "verify/ratio_0.2", "extract/ratio_0.2", "report"};
  ASSERT_EQ(first.stages.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(first.stages[i].stage, expect[i]);

  ExperimentPaths paths{dir.string()};
  for (const auto& f : {paths.marker_model(), paths.clean_model(), paths.reference_model(0), paths.secret(0.2),
                        paths.marked_train(0.2), paths.marked_model(0.2), paths.results(0.2),
                        paths.surrogate_model(0.2), paths.extraction(0.2)}) {
    EXPECT_TRUE(fs::exists(f)) << f;
  }
  const auto results = json::parse(read_file_text(paths.results(0.2)));
  EXPECT_EQ(results["marked_count"], 12);
  EXPECT_TRUE(results["requirements"].contains("utility"));
  const auto report = json::parse(read_file_text((fs::path(first.report_dir) / "report.json").string()));
  EXPECT_EQ(report["report_schema"], "radmark-report/1");
  EXPECT_EQ(report["manifest_digest"], manifest_digest(m));

  const auto second = run_experiment(m);
  EXPECT_EQ(skipped(second), second.stages.size());

  // A damaged output re-runs its stage. Retraining is bit-reproducible, so
  // downstream keys (which hash the regenerated outputs) still match.
  const auto before = read_file_bytes(paths.marked_model(0.2));
  write_file_text_atomic(paths.marked_model(0.2), "damaged");
  const auto third = run_experiment(m);
  for (const auto& st : third.stages) EXPECT_EQ(st.skipped, st.stage != "train/ratio_0.2") << st.stage;
  EXPECT_EQ(read_file_bytes(paths.marked_model(0.2)), before);

  // A changed verification setting invalidates verify and everything after it.
  m.verify.alpha = 0.01;
  const auto fourth = run_experiment(m);
  for (const auto& st : fourth.stages) {
    const bool rerun = st.stage == "verify/ratio_0.2" || st.stage == "extract/ratio_0.2" || st.stage == "report";
    EXPECT_EQ(st.skipped, !rerun) << st.stage;
  }
}

TEST(Harness, FailingStageIsNamed) {
  const auto dir = scratch("fail");
  auto m = tiny_manifest(dir.string());
  m.extraction.enabled = false;
  m.references.clear();
  m.adversary.hyper.learning_rate = std::numeric_limits<double>::quiet_NaN();
  try {
    run_experiment(m);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "clean");
  }
}

TEST(Report, TablesFromRunDirectory) {
  const auto dir = scratch("report");
  auto m = tiny_manifest(dir.string());
  m.references.clear();
  m.extraction.enabled = false;
  run_experiment(m);
  const auto bundle = build_report(dir.string());
  const auto& t1 = bundle.report["table1"];
  ASSERT_EQ(t1.size(), 2u);
  EXPECT_EQ(t1[0]["row"], "clean");
  EXPECT_NE(bundle.table1_csv.find("wm_ratio"), std::string::npos);
  EXPECT_FALSE(render_tables(bundle.report, false).empty());
}

TEST(Harness, ShippedManifestParses) {
  const auto m = load_manifest(std::string(RADMARK_SOURCE_DIR) + "/tools/manifests/desk.json");
  EXPECT_EQ(m.references.size(), 2u);
  EXPECT_TRUE(m.extraction.enabled);
  EXPECT_EQ(m.verify.space, ComparisonSpace::kMarker);
}
