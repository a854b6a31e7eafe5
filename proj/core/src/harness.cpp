#include "radmark/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "radmark/binio.hpp"
#include "radmark/digest.hpp"
#include "radmark/extraction.hpp"
#include "radmark/report.hpp"
#include "radmark/toy_data.hpp"
#include "radmark/transforms.hpp"

namespace radmark {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> default_budgets(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t decade = 1; decade < n; decade *= 10) {
    for (std::size_t k : {1, 2, 5}) {
      if (k * decade < n) out.push_back(k * decade);
    }
  }
  if (n > 0) out.push_back(n);
  return out;
}

MethodVerdicts verify_all_methods(const TrainedModel& suspect, const WatermarkSecret& secret,
                                  const RequirementDatasets& d, const RequirementConfig& config) {
  MethodVerdicts v;
  const auto wb = WhiteBoxSuspect::from_model(suspect);
  v.whitebox_test = whitebox_verify(wb, secret, *d.marker_fn, ProbeSource::kTestSet, d.test->images, config.whitebox);
  const auto probe = marked_probe_images(secret, *d.marked_train);
  v.whitebox_marked = whitebox_verify(wb, secret, *d.marker_fn, ProbeSource::kMarkedSet, probe, config.whitebox);
  const auto pairs = marked_pairs(secret, *d.marked_train, config.order_seed);
  v.blackbox = blackbox_verify(BlackBoxSuspect::from_model(suspect, suspect.weights_digest()), pairs);
  v.blackbox.order_seed = config.order_seed;
  v.blackbox.secret_digest = v.whitebox_test.secret_digest;
  return v;
}

namespace {

bool stealth_pass(const StealthReport& s, const RequirementConfig& c) {
  return (!c.min_psnr_db || s.psnr_db >= *c.min_psnr_db) && (!c.max_linf || s.linf_pixel <= *c.max_linf);
}

}  // namespace

RequirementReport check_requirements(const TrainedModel& clean_model, const TrainedModel& marked_model,
                                     const std::vector<NamedModel>& reference_models, const WatermarkSecret& secret,
                                     const RequirementDatasets& datasets, const RequirementConfig& config) {
  if (!datasets.marked_train || !datasets.test || !datasets.marker_fn) {
    throw InvalidArgument("check_requirements: marked train set, test set and marker features are required");
  }
  const int m = secret.carriers.class_count();
  auto check_classes = [m](const TrainedModel& model, const std::string& name) {
    if (model.class_count() != m) {
      throw InvalidArgument("check_requirements: " + name + " has " + std::to_string(model.class_count()) +
                            " classes, the secret " + std::to_string(m));
    }
  };
  check_classes(clean_model, "clean model");
  check_classes(marked_model, "marked model");
  for (const auto& r : reference_models) check_classes(*r.model, r.name);

  RequirementReport rep;
  rep.utility.acc_clean = 100.0 * evaluate_accuracy(clean_model, *datasets.test);
  rep.utility.acc_marked = 100.0 * evaluate_accuracy(marked_model, *datasets.test);
  rep.utility.gap_pp = rep.utility.acc_clean - rep.utility.acc_marked;
  rep.utility.pass = rep.utility.gap_pp <= config.max_gap_pp;

  auto& eff = rep.effectiveness;
  eff.verdicts = verify_all_methods(marked_model, secret, datasets, config);
  const auto budgets = config.budgets.empty() ? default_budgets(eff.verdicts.blackbox.pairs.size()) : config.budgets;
  eff.sweep = sweep_from_losses(eff.verdicts.blackbox.pairs, budgets);
  eff.smallest_sufficient_budget = smallest_sufficient_budget(eff.sweep);
  eff.pass = eff.verdicts.blackbox.decision && eff.verdicts.whitebox_marked.decision;
  eff.no_watermark_effect = !eff.verdicts.any_true();

  rep.integrity.pass = true;
  for (const auto& r : reference_models) {
    IntegrityEntry e;
    e.name = r.name;
    e.architecture = r.model->architecture();
    e.accuracy = 100.0 * evaluate_accuracy(*r.model, *datasets.test);
    e.verdicts = verify_all_methods(*r.model, secret, datasets, config);
    rep.integrity.pass = rep.integrity.pass && !e.verdicts.any_true();
    rep.integrity.models.push_back(std::move(e));
  }

  rep.stealthiness.report = stealth_metrics(secret, *datasets.marked_train);
  rep.stealthiness.pass = stealth_pass(rep.stealthiness.report, config);

  if (!config.robustness_transforms.empty()) {
    const auto pairs = marked_pairs(secret, *datasets.marked_train, config.order_seed);
    const auto suspect = BlackBoxSuspect::from_model(marked_model, marked_model.weights_digest());
    for (const auto& t : config.robustness_transforms) {
      auto moved = pairs;
      for (auto& p : moved) {
        p.clean = apply_transform(p.clean, secret.image_shape, t);
        p.marked = apply_transform(p.marked, secret.image_shape, t);
      }
      RobustnessEntry e{t, blackbox_verify(suspect, moved)};
      e.blackbox.order_seed = config.order_seed;
      rep.robustness.push_back(std::move(e));
    }
  }
  return rep;
}

bool RequirementReport::consistent(const RequirementConfig& c) const {
  bool ok = utility.pass == (utility.gap_pp <= c.max_gap_pp) &&
            utility.gap_pp == utility.acc_clean - utility.acc_marked;
  const auto& v = effectiveness.verdicts;
  ok = ok && v.whitebox_test.consistent() && v.whitebox_marked.consistent() && v.blackbox.consistent();
  ok = ok && effectiveness.pass == (v.blackbox.decision && v.whitebox_marked.decision);
  ok = ok && effectiveness.no_watermark_effect == !v.any_true();
  bool none = true;
  for (const auto& e : integrity.models) {
    ok = ok && e.verdicts.whitebox_test.consistent() && e.verdicts.whitebox_marked.consistent() &&
         e.verdicts.blackbox.consistent();
    none = none && !e.verdicts.any_true();
  }
  ok = ok && integrity.pass == none;
  ok = ok && stealthiness.pass == stealth_pass(stealthiness.report, c);
  return ok;
}

json to_json(const MethodVerdicts& v) {
  return {{"whitebox_test_probe", to_json(v.whitebox_test)},
          {"whitebox_marked_probe", to_json(v.whitebox_marked)},
          {"blackbox", to_json(v.blackbox)}};
}

json to_json(const RequirementReport& r) {
  json refs = json::array();
  for (const auto& e : r.integrity.models) {
    refs.push_back({{"name", e.name}, {"architecture", e.architecture}, {"accuracy", e.accuracy},
                    {"verdicts", to_json(e.verdicts)}});
  }
  json rob = json::array();
  for (const auto& e : r.robustness) rob.push_back({{"transform", e.transform}, {"blackbox", to_json(e.blackbox)}});
  const auto& eff = r.effectiveness;
  return {{"utility",
           {{"acc_clean", r.utility.acc_clean},
            {"acc_marked", r.utility.acc_marked},
            {"gap_pp", r.utility.gap_pp},
            {"pass", r.utility.pass}}},
          {"effectiveness",
           {{"verdicts", to_json(eff.verdicts)},
            {"sweep", to_json(std::span<const SweepPoint>(eff.sweep))},
            {"smallest_sufficient_budget",
             eff.smallest_sufficient_budget ? json(*eff.smallest_sufficient_budget) : json(nullptr)},
            {"pair_count", eff.verdicts.blackbox.samples_used},
            {"pass", eff.pass},
            {"no_watermark_effect", eff.no_watermark_effect}}},
          {"integrity", {{"models", refs}, {"pass", r.integrity.pass}}},
          {"stealthiness", {{"report", to_json(r.stealthiness.report)}, {"pass", r.stealthiness.pass}}},
          {"robustness", rob}};
}

// ---------------------------------------------------------------------------

namespace {

std::string ratio_tag(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ratio_%.4g", r);
  return buf;
}

std::string join(const std::string& a, const std::string& b) { return (fs::path(a) / b).string(); }

}  // namespace

std::string ExperimentPaths::marker_model() const { return join(root, "models/marker.rmdl"); }
std::string ExperimentPaths::clean_model() const { return join(root, "models/clean.rmdl"); }
std::string ExperimentPaths::reference_model(std::size_t i) const {
  return join(root, "models/reference_" + std::to_string(i) + ".rmdl");
}
std::string ExperimentPaths::ratio_dir(double r) const { return join(root, ratio_tag(r)); }
std::string ExperimentPaths::secret(double r) const { return join(ratio_dir(r), "secret.rmrk"); }
std::string ExperimentPaths::marked_train(double r) const { return join(ratio_dir(r), "marked_train.tar"); }
std::string ExperimentPaths::marked_model(double r) const { return join(ratio_dir(r), "marked_model.rmdl"); }
std::string ExperimentPaths::results(double r) const { return join(ratio_dir(r), "results.json"); }
std::string ExperimentPaths::surrogate_model(double r) const { return join(ratio_dir(r), "surrogate.rmdl"); }
std::string ExperimentPaths::transfer_dir(double r) const { return join(ratio_dir(r), "transfer"); }
std::string ExperimentPaths::extraction(double r) const { return join(ratio_dir(r), "extraction.json"); }
std::string ExperimentPaths::report_dir() const { return join(root, "report"); }

TaskData load_task_data(const DatasetSpec& spec) {
  TaskData d;
  if (spec.format == "toy") {
    auto t = make_toy_task(spec.toy);
    d.train = std::move(t.train);
    d.test = std::move(t.test);
    d.heldout = std::move(t.heldout);
  } else {
    const auto fmt = dataset_format_from_string(spec.format);
    d.train = load_dataset(spec.train_path, fmt, Split::kTrain);
    d.test = load_dataset(spec.test_path.empty() ? spec.train_path : spec.test_path, fmt, Split::kTest);
  }
  if (spec.subset) {
    d.train = build_class_subset(d.train, *spec.subset);
    d.test = build_class_subset(d.test, *spec.subset);
  }
  return d;
}

ExtractionPools make_extraction_pools(const TaskData& data, const ExtractionSpec& spec) {
  std::vector<Image> all = make_natural_pool(static_cast<int>(spec.pool_size), data.train.shape, spec.seed);
  all.insert(all.end(), data.heldout.images.begin(), data.heldout.images.end());
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(all.begin(), all.end(), rng);
  const std::size_t h = std::min(spec.heldout_queries, all.size());
  ExtractionPools p;
  p.heldout.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(h));
  p.pool.assign(all.begin() + static_cast<std::ptrdiff_t>(h), all.end());
  return p;
}

std::span<const Image> agreement_queries(const TaskData& data, const ExtractionPools& pools,
                                         const ExtractionSpec& spec) {
  if (spec.agreement_source == "pool_holdout") return pools.heldout;
  return data.test.images;
}

namespace {

std::string file_digest(const std::string& path) { return sha256_hex(read_file_bytes(path)); }

// checkpoints.json: stage -> {key, outputs: {path: sha256}}.
class CheckpointStore {
 public:
  explicit CheckpointStore(std::string path) : path_(std::move(path)) {
    if (fs::exists(path_)) {
      try {
        state_ = json::parse(read_file_text(path_));
      } catch (const json::exception&) {
        state_ = json::object();
      }
    }
    if (!state_.is_object()) state_ = json::object();
  }

  bool fresh(const std::string& stage, const std::string& key) const {
    if (!state_.contains(stage) || state_[stage].value("key", "") != key) return false;
    for (const auto& [p, sha] : state_[stage]["outputs"].items()) {
      if (!fs::exists(p) || file_digest(p) != sha.get<std::string>()) return false;
    }
    return true;
  }

  std::string output_digest(const std::string& stage) const {
    return state_.contains(stage) ? sha256_hex(state_[stage]["outputs"].dump()) : std::string();
  }

  void commit(const std::string& stage, const std::string& key, const std::vector<std::string>& outputs) {
    json outs = json::object();
    for (const auto& p : outputs) outs[p] = file_digest(p);
    state_[stage] = {{"key", key}, {"outputs", outs}};
    write_file_text_atomic(path_, state_.dump(2) + "\n");
  }

 private:
  std::string path_;
  json state_;
};

class StageRunner {
 public:
  StageRunner(CheckpointStore& store, RunSummary& summary, const ProgressFn& progress)
      : store_(store), summary_(summary), progress_(progress) {}

  // Returns the digest of the stage outputs, usable as an input key downstream.
  template <typename Fn>
  std::string run(const std::string& stage, const json& inputs, const std::vector<std::string>& outputs, Fn&& fn) {
    const std::string key = sha256_hex(inputs.dump());
    if (store_.fresh(stage, key)) {
      summary_.stages.push_back({stage, true});
      if (progress_) progress_(stage, "up to date");
      return store_.output_digest(stage);
    }
    if (progress_) progress_(stage, "running");
    try {
      for (const auto& o : outputs) fs::create_directories(fs::path(o).parent_path());
      fn();
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
    store_.commit(stage, key, outputs);
    summary_.stages.push_back({stage, false});
    if (progress_) progress_(stage, "done");
    return store_.output_digest(stage);
  }

 private:
  CheckpointStore& store_;
  RunSummary& summary_;
  const ProgressFn& progress_;
};

json model_spec_json(const ModelSpec& m) { return {{"architecture", m.architecture}, {"hyper", nn::to_json(m.hyper)}}; }

}  // namespace

RunSummary run_experiment(const ExperimentManifest& manifest, const ProgressFn& progress) {
  manifest.validate();
  ExperimentPaths paths{manifest.output_dir};
  fs::create_directories(paths.root);
  const std::string manifest_path = join(paths.root, "manifest.json");
  save_manifest(manifest, manifest_path);

  RunSummary summary;
  summary.output_dir = paths.root;
  summary.report_dir = paths.report_dir();
  CheckpointStore store(join(paths.root, "checkpoints.json"));
  StageRunner runner(store, summary, progress);

  if (progress) progress("data", "loading");
  const TaskData data = load_task_data(manifest.dataset);
  const std::string data_key = dataset_digest(data.train) + ":" + dataset_digest(data.test);

  const auto marker_d = runner.run("marker", {{"data", data_key}, {"model", model_spec_json(manifest.marker)}},
                                   {paths.marker_model()}, [&] {
                                     save_model(train_classifier(data.train, manifest.marker.architecture,
                                                                 manifest.marker.hyper),
                                                paths.marker_model());
                                   });
  const auto clean_d = runner.run("clean", {{"data", data_key}, {"model", model_spec_json(manifest.adversary)}},
                                  {paths.clean_model()}, [&] {
                                    save_model(train_classifier(data.train, manifest.adversary.architecture,
                                                                manifest.adversary.hyper),
                                               paths.clean_model());
                                  });
  std::vector<std::string> ref_d;
  for (std::size_t i = 0; i < manifest.references.size(); ++i) {
    const auto& spec = manifest.references[i];
    ref_d.push_back(runner.run("reference_" + std::to_string(i), {{"data", data_key}, {"model", model_spec_json(spec)}},
                               {paths.reference_model(i)}, [&] {
                                 save_model(train_classifier(data.train, spec.architecture, spec.hyper),
                                            paths.reference_model(i));
                               }));
  }

  const TrainedModel marker = load_model(paths.marker_model());
  const TrainedModel clean = load_model(paths.clean_model());
  std::vector<TrainedModel> references;
  for (std::size_t i = 0; i < manifest.references.size(); ++i) references.push_back(load_model(paths.reference_model(i)));

  RequirementConfig rc;
  rc.whitebox.alpha = manifest.verify.alpha;
  rc.whitebox.space = manifest.verify.space;
  rc.whitebox.center_weights = manifest.verify.center_weights;
  rc.order_seed = manifest.verify.order_seed;
  rc.budgets = manifest.verify.budgets;
  rc.max_gap_pp = manifest.requirements.max_gap_pp;
  rc.min_psnr_db = manifest.requirements.min_psnr_db;
  rc.max_linf = manifest.requirements.max_linf;
  if (manifest.robustness.enabled) rc.robustness_transforms = manifest.robustness.transforms;
  const json verify_cfg = to_json(manifest)["verify"];
  const json req_cfg = {{"requirements", to_json(manifest)["requirements"]}, {"robustness", to_json(manifest)["robustness"]}};

  json report_inputs = {{"manifest", manifest_digest(manifest)}};
  for (double ratio : manifest.wm_ratios) {
    const std::string tag = ratio_tag(ratio);
    const auto mark_d = runner.run(
        "mark/" + tag,
        {{"data", data_key}, {"ratio", ratio}, {"selection_seed", manifest.selection_seed},
         {"carrier_seed", manifest.carrier_seed}, {"embed", to_json(manifest.embed)}, {"marker", marker_d}},
        {paths.secret(ratio), paths.marked_train(ratio)}, [&] {
          const auto sel = select_marking_targets(data.train, ratio, manifest.selection_seed);
          const auto carriers = generate_carriers(data.train.class_count(), marker.feature_dim(), manifest.carrier_seed);
          auto res = mark_dataset(data.train, sel, carriers, marker, manifest.embed, marker.weights_digest());
          save_secret(res.secret, paths.secret(ratio));
          save_dataset_archive(paths.marked_train(ratio), {&res.marked});
        });
    const WatermarkSecret secret = load_secret(paths.secret(ratio));
    LabeledImageDataset marked_train = load_dataset(paths.marked_train(ratio), DatasetFormat::kArchive, Split::kTrain);

    const auto train_d = runner.run("train/" + tag, {{"marked", mark_d}, {"model", model_spec_json(manifest.adversary)}},
                                    {paths.marked_model(ratio)}, [&] {
                                      save_model(train_classifier(marked_train, manifest.adversary.architecture,
                                                                  manifest.adversary.hyper),
                                                 paths.marked_model(ratio));
                                    });
    const TrainedModel marked_model = load_model(paths.marked_model(ratio));
    RequirementDatasets rd{&marked_train, &data.test, &marker};

    const auto verify_d = runner.run(
        "verify/" + tag,
        {{"marked", mark_d}, {"train", train_d}, {"clean", clean_d}, {"refs", ref_d}, {"marker", marker_d},
         {"verify", verify_cfg}, {"requirements", req_cfg}, {"data", data_key}},
        {paths.results(ratio)}, [&] {
          std::vector<NamedModel> refs;
          for (std::size_t i = 0; i < references.size(); ++i) {
            refs.push_back({"reference_" + std::to_string(i) + ":" + references[i].architecture(), &references[i]});
          }
          const auto rep = check_requirements(clean, marked_model, refs, secret, rd, rc);
          json out = {{"dataset", data.train.dataset_id},
                      {"wm_ratio", ratio},
                      {"marked_count", secret.clean_originals.size()},
                      {"requirements", to_json(rep)},
                      {"clean_model",
                       {{"architecture", clean.architecture()},
                        {"accuracy", rep.utility.acc_clean},
                        {"verdicts", to_json(verify_all_methods(clean, secret, rd, rc))}}}};
          write_file_text_atomic(paths.results(ratio), out.dump(2) + "\n");
        });
    report_inputs["verify/" + tag] = verify_d;

    if (manifest.extraction.enabled) {
      const auto& ex = manifest.extraction;
      const auto extract_d = runner.run(
          "extract/" + tag,
          {{"train", train_d}, {"marked", mark_d}, {"marker", marker_d}, {"data", data_key},
           {"extraction", to_json(manifest)["extraction"]}, {"verify", verify_cfg}},
          {paths.surrogate_model(ratio), paths.extraction(ratio)}, [&] {
            const auto pools = make_extraction_pools(data, ex);
            const auto victim = BlackBoxSuspect::from_model(marked_model, marked_model.weights_digest());
            TransferOptions topt;
            topt.checkpoint_path = join(paths.ratio_dir(ratio), "transfer.partial");
            const auto transfer = build_transfer_set(victim, pools.pool, data.train.shape,
                                                     std::min(ex.budget, pools.pool.size()), ex.seed, topt);
            save_transfer_set(transfer, paths.transfer_dir(ratio));
            SurrogateOptions sopt;
            sopt.hard_labels = ex.hard_labels;
            const auto surrogate = train_surrogate(transfer, ex.surrogate.architecture, ex.surrogate.hyper, sopt);
            save_model(surrogate, paths.surrogate_model(ratio));
            SurvivalInputs in;
            in.secret = &secret;
            in.marked = &marked_train;
            in.test = &data.test;
            in.marker_fn = &marker;
            in.heldout_queries = agreement_queries(data, pools, ex);
            in.whitebox = rc.whitebox;
            in.order_seed = rc.order_seed;
            in.agreement_floor = ex.agreement_floor;
            const auto rep = extraction_survival_report(marked_model, surrogate, in);
            json out = {{"dataset", data.train.dataset_id},
                        {"wm_ratio", ratio},
                        {"transfer_size", transfer.size()},
                        {"surrogate_architecture", surrogate.architecture()},
                        {"survival", to_json(rep)}};
            write_file_text_atomic(paths.extraction(ratio), out.dump(2) + "\n");
          });
      report_inputs["extract/" + tag] = extract_d;
    }
  }

  const std::string rd = paths.report_dir();
  runner.run("report", report_inputs,
             {join(rd, "report.json"), join(rd, "table1.csv"), join(rd, "table2.csv"), join(rd, "table3.csv"),
              join(rd, "sweep.csv")},
             [&] { write_report_bundle(build_report(paths.root), rd); });
  return summary;
}

}  // namespace radmark
