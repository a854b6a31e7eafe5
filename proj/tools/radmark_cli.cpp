// radmark: dataset watermarking and ownership verification from the shell.
//
// Exit codes: 0 success, 1 verification decided False under --assert-owned,
// 2 usage or runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "radmark/architectures.hpp"
#include "radmark/binio.hpp"
#include "radmark/error.hpp"
#include "radmark/extraction.hpp"
#include "radmark/harness.hpp"
#include "radmark/manifest.hpp"
#include "radmark/marker.hpp"
#include "radmark/model.hpp"
#include "radmark/profile.hpp"
#include "radmark/report.hpp"
#include "radmark/toy_data.hpp"
#include "radmark/verify.hpp"

namespace fs = std::filesystem;
using namespace radmark;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotOwned = 1;
constexpr int kExitError = 2;

struct DataArg {
  std::string path;
  std::string format = "archive";

  void add(CLI::App* app, const std::string& name, const std::string& help) {
    app->add_option("--" + name, path, help);
    app->add_option("--" + name + "-format", format, "cifar10 | cifar100 | folders | archive")->capture_default_str();
  }
  LabeledImageDataset load(Split split) const { return load_dataset(path, dataset_format_from_string(format), split); }
};

// Values a subcommand may take from --manifest (and --ratio) when the
// explicit flag is absent.
struct ManifestDefaults {
  std::string manifest;
  double ratio = 0.0;

  void add(CLI::App* app) {
    app->add_option("--manifest", manifest, "experiment manifest supplying defaults for unset flags");
    app->add_option("--ratio", ratio, "which wm_ratio of the manifest to use (default: the first)");
  }
  std::optional<ExperimentManifest> load() const {
    if (manifest.empty()) return std::nullopt;
    return load_manifest(manifest);
  }
  double pick_ratio(const ExperimentManifest& m) const { return ratio > 0.0 ? ratio : m.wm_ratios.front(); }
};

void fill(std::string& target, const std::string& fallback) {
  if (target.empty()) target = fallback;
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw InvalidArgument(flag + " is required (or pass --manifest)");
}

void emit_json(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_file_text_atomic(out, j.dump(2) + "\n");
  }
}

void add_hyper(CLI::App* app, nn::TrainHyper& h) {
  app->add_option("--epochs", h.epochs)->capture_default_str();
  app->add_option("--batch-size", h.batch_size)->capture_default_str();
  app->add_option("--lr", h.learning_rate)->capture_default_str();
  app->add_option("--momentum", h.momentum)->capture_default_str();
  app->add_option("--weight-decay", h.weight_decay)->capture_default_str();
  app->add_option("--lr-milestones", h.lr_milestones)->delimiter(',');
  app->add_option("--lr-decay", h.lr_decay)->capture_default_str();
  app->add_option("--warmup-epochs", h.warmup_epochs)->capture_default_str();
  app->add_flag("--hflip", h.horizontal_flip, "random horizontal flips during training");
  app->add_option("--seed", h.seed)->capture_default_str();
}

void print_verdict(const VerificationVerdict& v) {
  std::fprintf(stderr, "%s: statistic %.4f threshold %.4f -> %s (%zu samples)\n", to_string(v.method).c_str(),
               v.statistic, v.threshold, v.decision ? "True" : "False", v.samples_used);
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"radmark: radioactive dataset watermarking and ownership verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "radmark 0.1.0");

  // make-toy ----------------------------------------------------------------
  ToyTaskConfig toy;
  std::string toy_out;
  auto* make_toy = app.add_subcommand("make-toy", "generate the procedural desk task as a dataset archive");
  make_toy->add_option("--out", toy_out, "archive path (train, test and probe=held-out classes)")->required();
  make_toy->add_option("--classes", toy.classes)->capture_default_str();
  make_toy->add_option("--train-per-class", toy.train_per_class)->capture_default_str();
  make_toy->add_option("--test-per-class", toy.test_per_class)->capture_default_str();
  make_toy->add_option("--seed", toy.seed)->capture_default_str();

  // train -------------------------------------------------------------------
  DataArg train_data;
  std::string train_arch = "desk_cnn", train_out;
  nn::TrainHyper train_hyper;
  auto* train = app.add_subcommand("train", "train a classifier and write a model container");
  train_data.add(train, "data", "training data (train split)");
  train->add_option("--arch", train_arch, "architecture tag")->capture_default_str();
  train->add_option("--out", train_out, "model container path")->required();
  add_hyper(train, train_hyper);
  ManifestDefaults train_md;
  std::string train_role = "adversary";
  train_md.add(train);
  train->add_option("--role", train_role, "manifest model entry: marker | adversary")->capture_default_str();

  // mark --------------------------------------------------------------------
  DataArg mark_data;
  std::string mark_marker, mark_out_data, mark_out_secret;
  double mark_ratio = 0.1;
  std::uint64_t mark_sel_seed = 0, mark_carrier_seed = 0;
  EmbedParams embed;
  double linf = 0.0;
  bool no_quantize = false;
  auto* mark = app.add_subcommand("mark", "watermark a dataset with a marker model");
  mark_data.add(mark, "data", "clean training data");
  mark->add_option("--marker", mark_marker, "marker model container")->required();
  mark->add_option("--wm-ratio", mark_ratio, "fraction of each class to mark")->capture_default_str();
  mark->add_option("--selection-seed", mark_sel_seed)->capture_default_str();
  mark->add_option("--carrier-seed", mark_carrier_seed)->capture_default_str();
  mark->add_option("--lambda-pixel", embed.lambda_pixel)->capture_default_str();
  mark->add_option("--lambda-feature", embed.lambda_feature)->capture_default_str();
  mark->add_option("--steps", embed.steps)->capture_default_str();
  mark->add_option("--step-size", embed.step_size)->capture_default_str();
  mark->add_option("--linf-budget", linf, "optional L-infinity bound in (0,1]");
  mark->add_flag("--no-quantize", no_quantize, "keep marked pixels off the 8-bit grid");
  mark->add_option("--out-data", mark_out_data, "marked dataset archive")->required();
  mark->add_option("--out-secret", mark_out_secret, "secret file")->required();

  // verify-wb ---------------------------------------------------------------
  std::string wb_secret, wb_marker, wb_suspect, wb_probe = "marked_set", wb_space, wb_out;
  DataArg wb_marked, wb_test;
  double wb_alpha = 0.05;
  bool wb_assert = false, wb_center = false, wb_both = false;
  ManifestDefaults wb_md;
  auto* vwb = app.add_subcommand("verify-wb", "white-box verification of a suspect model");
  vwb->add_option("--secret", wb_secret);
  vwb->add_option("--marker", wb_marker, "marker model container");
  vwb->add_option("--suspect", wb_suspect, "suspect model container")->required();
  vwb->add_option("--probe-source", wb_probe, "marked_set | test_set")->capture_default_str();
  vwb->add_flag("--both", wb_both, "report both probe sources (decision from --probe-source)");
  wb_marked.add(vwb, "marked-data", "marked training data (for the marked_set probe)");
  wb_test.add(vwb, "test-data", "held-out test data (for the test_set probe)");
  vwb->add_option("--alpha", wb_alpha)->capture_default_str();
  vwb->add_option("--space", wb_space, "suspect | marker");
  vwb->add_flag("--center-weights", wb_center);
  vwb->add_flag("--assert-owned", wb_assert, "exit 1 when the decision is False");
  vwb->add_option("--json", wb_out, "write the verdict JSON here ('-' for stdout)");
  wb_md.add(vwb);

  // verify-bb ---------------------------------------------------------------
  std::string bb_secret, bb_suspect, bb_out;
  DataArg bb_marked;
  std::size_t bb_budget = 0;
  std::uint64_t bb_order_seed = 0;
  bool bb_assert = false, bb_pairs = false;
  ManifestDefaults bb_md;
  auto* vbb = app.add_subcommand("verify-bb", "black-box verification through a probability interface");
  vbb->add_option("--secret", bb_secret);
  bb_marked.add(vbb, "marked-data", "marked training data");
  vbb->add_option("--suspect-endpoint", bb_suspect, "local model container answering probability queries")->required();
  vbb->add_option("--budget", bb_budget, "number of marked/clean pairs to query (default: all)");
  auto* bb_seed_opt = vbb->add_option("--order-seed", bb_order_seed, "pair shuffling seed");
  vbb->add_flag("--assert-owned", bb_assert, "exit 1 when the decision is False");
  vbb->add_flag("--with-pairs", bb_pairs, "include per-pair losses in the JSON");
  vbb->add_option("--json", bb_out, "write the verdict JSON here ('-' for stdout)");
  bb_md.add(vbb);

  // sweep-bb ----------------------------------------------------------------
  std::string sw_secret, sw_suspect, sw_csv;
  DataArg sw_marked;
  std::vector<std::size_t> sw_budgets;
  std::uint64_t sw_order_seed = 0;
  ManifestDefaults sw_md;
  auto* sbb = app.add_subcommand("sweep-bb", "black-box statistic as a function of the pair budget");
  sbb->add_option("--secret", sw_secret);
  sw_marked.add(sbb, "marked-data", "marked training data");
  sbb->add_option("--suspect-endpoint", sw_suspect)->required();
  sbb->add_option("--budgets", sw_budgets, "ascending budgets (default 1,2,5,10,... up to all pairs)")->delimiter(',');
  auto* sw_seed_opt = sbb->add_option("--order-seed", sw_order_seed);
  sbb->add_option("--csv", sw_csv, "write budget,statistic,decision rows here");
  sw_md.add(sbb);

  // extract -----------------------------------------------------------------
  std::string ex_victim, ex_arch = "desk_cnn", ex_out, ex_transfer;
  std::size_t ex_pool = 6000, ex_budget = 6000;
  std::uint64_t ex_seed = 0;
  bool ex_hard = false;
  nn::TrainHyper ex_hyper;
  DataArg ex_heldout;
  auto* extract = app.add_subcommand("extract", "distill a surrogate from a victim's probability answers");
  extract->add_option("--victim", ex_victim, "victim model container")->required();
  extract->add_option("--arch", ex_arch)->capture_default_str();
  extract->add_option("--pool-size", ex_pool, "natural-statistics pool images")->capture_default_str();
  extract->add_option("--budget", ex_budget, "victim queries")->capture_default_str();
  extract->add_option("--pool-seed", ex_seed)->capture_default_str();
  ex_heldout.add(extract, "extra-pool", "optional archive whose probe split joins the pool");
  extract->add_flag("--hard-labels", ex_hard, "train on the victim's top-1 label only");
  extract->add_option("--transfer-dir", ex_transfer, "also save the transfer set here");
  extract->add_option("--out", ex_out, "surrogate model container")->required();
  add_hyper(extract, ex_hyper);

  // check -------------------------------------------------------------------
  std::string ck_clean, ck_marked_model, ck_secret, ck_marker, ck_out;
  std::vector<std::string> ck_refs;
  DataArg ck_marked, ck_test;
  ManifestDefaults ck_md;
  RequirementConfig ck_cfg;
  auto* check = app.add_subcommand("check", "score utility, effectiveness, integrity and stealthiness");
  check->add_option("--clean-model", ck_clean);
  check->add_option("--marked-model", ck_marked_model);
  check->add_option("--reference", ck_refs, "reference model container (repeatable)");
  check->add_option("--secret", ck_secret);
  check->add_option("--marker", ck_marker);
  ck_marked.add(check, "marked-data", "marked training data");
  ck_test.add(check, "test-data", "test data");
  check->add_option("--alpha", ck_cfg.whitebox.alpha)->capture_default_str();
  check->add_option("--max-gap-pp", ck_cfg.max_gap_pp)->capture_default_str();
  check->add_option("--json", ck_out, "write the requirement report here ('-' for stdout)");
  ck_md.add(check);

  // run / report ------------------------------------------------------------
  std::string run_manifest;
  auto* run = app.add_subcommand("run", "execute a manifest end to end with checkpoints");
  run->add_option("--manifest", run_manifest)->required();

  std::string rep_dir, rep_format = "text", rep_manifest;
  bool rep_color = false;
  auto* report = app.add_subcommand("report", "regenerate and print the report bundle of an experiment");
  report->add_option("--dir", rep_dir, "experiment output directory");
  report->add_option("--manifest", rep_manifest, "take the output directory from this manifest");
  report->add_option("--format", rep_format, "text | json | csv")->check(CLI::IsMember({"text", "json", "csv"}));
  report->add_flag("--color", rep_color, "colour outcomes in text output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitError;
  }

  try {
    if (*make_toy) {
      const auto t = make_toy_task(toy);
      auto heldout = t.heldout;
      heldout.split = Split::kProbe;
      heldout.class_names = t.train.class_names;
      heldout.labels.assign(heldout.size(), 0);  // held-out classes carry no task label
      save_dataset_archive(toy_out, {&t.train, &t.test, &heldout});
      std::fprintf(stderr, "wrote %zu train, %zu test, %zu held-out images to %s\n", t.train.size(), t.test.size(),
                   heldout.size(), toy_out.c_str());
    } else if (*train) {
      if (auto m = train_md.load()) {
        const auto& spec = train_role == "marker" ? m->marker : m->adversary;
        if (train->count("--arch") == 0) train_arch = spec.architecture;
        if (train->count("--epochs") == 0) train_hyper = spec.hyper;
      }
      require(train_data.path, "--data");
      const auto ds = train_data.load(Split::kTrain);
      const auto model = train_classifier(ds, train_arch, train_hyper);
      save_model(model, train_out);
      std::fprintf(stderr, "trained %s: train accuracy %.4f, digest %s\n", train_arch.c_str(),
                   model.manifest().value("train_accuracy", 0.0), model.weights_digest().c_str());
    } else if (*mark) {
      if (linf > 0.0) embed.linf_budget = linf;
      embed.quantize_8bit = !no_quantize;
      require(mark_data.path, "--data");
      const auto ds = mark_data.load(Split::kTrain);
      const auto marker = load_model(mark_marker);
      const auto sel = select_marking_targets(ds, mark_ratio, mark_sel_seed);
      const auto carriers = generate_carriers(ds.class_count(), marker.feature_dim(), mark_carrier_seed);
      const auto res = mark_dataset(ds, sel, carriers, marker, embed, marker.weights_digest());
      save_secret(res.secret, mark_out_secret);
      save_dataset_archive(mark_out_data, {&res.marked});
      const auto stealth = stealth_metrics(res.secret, res.marked);
      // Sidecar: how the data was marked and where the secret lives, never the carriers.
      json sidecar = {{"embed", to_json(embed)},
                      {"wm_ratio", mark_ratio},
                      {"selection_seed", mark_sel_seed},
                      {"marked_count", sel.total()},
                      {"secret_path", fs::absolute(mark_out_secret).string()},
                      {"marker_digest", marker.weights_digest()},
                      {"stealth", to_json(stealth)}};
      write_file_text_atomic(mark_out_data + ".json", sidecar.dump(2) + "\n");
      std::fprintf(stderr, "marked %zu samples; mean PSNR %.2f dB, max Linf %.4f\n", sel.total(), stealth.psnr_db,
                   stealth.linf_pixel);
    } else if (*vwb) {
      WhiteBoxOptions opt;
      opt.alpha = wb_alpha;
      opt.center_weights = wb_center;
      if (auto m = wb_md.load()) {
        ExperimentPaths p{m->output_dir};
        const double r = wb_md.pick_ratio(*m);
        fill(wb_secret, p.secret(r));
        fill(wb_marker, p.marker_model());
        fill(wb_marked.path, p.marked_train(r));
        if (vwb->count("--alpha") == 0) opt.alpha = m->verify.alpha;
        opt.space = m->verify.space;
        opt.center_weights = opt.center_weights || m->verify.center_weights;
        if (wb_test.path.empty() && m->dataset.format != "toy") {
          wb_test.path = m->dataset.test_path.empty() ? m->dataset.train_path : m->dataset.test_path;
          wb_test.format = m->dataset.format;
        }
      }
      if (!wb_space.empty()) opt.space = comparison_space_from_string(wb_space);
      require(wb_secret, "--secret");
      require(wb_marker, "--marker");
      const auto secret = load_secret(wb_secret);
      const auto marker = load_model(wb_marker);
      const auto suspect = load_model(wb_suspect);
      const auto ws = WhiteBoxSuspect::from_model(suspect);
      const auto primary = probe_source_from_string(wb_probe);
      auto run_probe = [&](ProbeSource src) {
        if (src == ProbeSource::kMarkedSet) {
          require(wb_marked.path, "--marked-data");
          const auto marked = wb_marked.load(Split::kTrain);
          return whitebox_verify(ws, secret, marker, src, marked_probe_images(secret, marked), opt);
        }
        require(wb_test.path, "--test-data");
        const auto test = wb_test.load(Split::kTest);
        return whitebox_verify(ws, secret, marker, src, test.images, opt);
      };
      const auto v = run_probe(primary);
      json out = to_json(v);
      if (wb_both) {
        const auto other = run_probe(primary == ProbeSource::kMarkedSet ? ProbeSource::kTestSet : ProbeSource::kMarkedSet);
        print_verdict(other);
        out = {{"primary", to_json(v)}, {"secondary", to_json(other)}};
      }
      print_verdict(v);
      if (!wb_out.empty()) emit_json(out, wb_out);
      if (wb_assert && !v.decision) return kExitNotOwned;
    } else if (*vbb) {
      if (auto m = bb_md.load()) {
        ExperimentPaths p{m->output_dir};
        const double r = bb_md.pick_ratio(*m);
        fill(bb_secret, p.secret(r));
        fill(bb_marked.path, p.marked_train(r));
        if (bb_seed_opt->count() == 0) bb_order_seed = m->verify.order_seed;
      }
      require(bb_secret, "--secret");
      require(bb_marked.path, "--marked-data");
      const auto secret = load_secret(bb_secret);
      const auto marked = bb_marked.load(Split::kTrain);
      const auto suspect_model = load_model(bb_suspect);
      const auto suspect = BlackBoxSuspect::from_model(suspect_model, suspect_model.weights_digest());
      const auto pairs = marked_pairs(secret, marked, bb_order_seed);
      auto v = blackbox_verify(suspect, pairs, bb_budget ? std::optional<std::size_t>(bb_budget) : std::nullopt);
      v.order_seed = bb_order_seed;
      v.secret_digest = secret_digest(secret);
      print_verdict(v);
      if (!bb_out.empty()) emit_json(to_json(v, bb_pairs), bb_out);
      if (bb_assert && !v.decision) return kExitNotOwned;
    } else if (*sbb) {
      if (auto m = sw_md.load()) {
        ExperimentPaths p{m->output_dir};
        const double r = sw_md.pick_ratio(*m);
        fill(sw_secret, p.secret(r));
        fill(sw_marked.path, p.marked_train(r));
        if (sw_seed_opt->count() == 0) sw_order_seed = m->verify.order_seed;
        if (sw_budgets.empty()) sw_budgets = m->verify.budgets;
      }
      require(sw_secret, "--secret");
      require(sw_marked.path, "--marked-data");
      const auto secret = load_secret(sw_secret);
      const auto marked = sw_marked.load(Split::kTrain);
      const auto suspect_model = load_model(sw_suspect);
      const auto pairs = marked_pairs(secret, marked, sw_order_seed);
      if (sw_budgets.empty()) sw_budgets = default_budgets(pairs.size());
      const auto sweep =
          blackbox_sample_sweep(BlackBoxSuspect::from_model(suspect_model, suspect_model.weights_digest()), pairs,
                                sw_budgets);
      std::ostringstream csv;
      csv << "budget,statistic,decision\n";
      for (const auto& p : sweep) {
        char line[96];
        std::snprintf(line, sizeof line, "%zu,%.17g,%s\n", p.budget, p.statistic, p.decision ? "true" : "false");
        csv << line;
      }
      if (sw_csv.empty()) {
        std::cout << csv.str();
      } else {
        write_file_text_atomic(sw_csv, csv.str());
      }
      const auto best = smallest_sufficient_budget(sweep);
      std::fprintf(stderr, "smallest sufficient budget: %s of %zu pairs\n",
                   best ? std::to_string(*best).c_str() : "none", pairs.size());
    } else if (*extract) {
      const auto victim = load_model(ex_victim);
      const ImageShape shape = victim.network().input_shape();
      auto pool = make_natural_pool(static_cast<int>(ex_pool), shape, ex_seed);
      if (!ex_heldout.path.empty()) {
        const auto extra = ex_heldout.load(Split::kProbe);
        pool.insert(pool.end(), extra.images.begin(), extra.images.end());
      }
      const auto bb = BlackBoxSuspect::from_model(victim, victim.weights_digest());
      const auto transfer = build_transfer_set(bb, pool, shape, std::min(ex_budget, pool.size()), ex_seed);
      if (!ex_transfer.empty()) save_transfer_set(transfer, ex_transfer);
      SurrogateOptions so;
      so.hard_labels = ex_hard;
      const auto surrogate = train_surrogate(transfer, ex_arch, ex_hyper, so);
      save_model(surrogate, ex_out);
      std::fprintf(stderr, "surrogate %s trained on %zu victim answers; digest %s\n", ex_arch.c_str(),
                   transfer.size(), surrogate.weights_digest().c_str());
    } else if (*check) {
      std::optional<TaskData> task;
      if (auto m = ck_md.load()) {
        ExperimentPaths p{m->output_dir};
        const double r = ck_md.pick_ratio(*m);
        fill(ck_clean, p.clean_model());
        fill(ck_marked_model, p.marked_model(r));
        fill(ck_secret, p.secret(r));
        fill(ck_marker, p.marker_model());
        fill(ck_marked.path, p.marked_train(r));
        if (ck_refs.empty()) {
          for (std::size_t i = 0; i < m->references.size(); ++i) ck_refs.push_back(p.reference_model(i));
        }
        if (ck_test.path.empty()) task = load_task_data(m->dataset);
        if (check->count("--alpha") == 0) ck_cfg.whitebox.alpha = m->verify.alpha;
        ck_cfg.whitebox.space = m->verify.space;
        ck_cfg.order_seed = m->verify.order_seed;
        ck_cfg.budgets = m->verify.budgets;
        ck_cfg.min_psnr_db = m->requirements.min_psnr_db;
        ck_cfg.max_linf = m->requirements.max_linf;
      }
      for (const auto* f : {&ck_clean, &ck_marked_model, &ck_secret, &ck_marker, &ck_marked.path}) require(*f, "model, secret and data paths");
      const auto clean = load_model(ck_clean);
      const auto marked_model = load_model(ck_marked_model);
      const auto marker = load_model(ck_marker);
      const auto secret = load_secret(ck_secret);
      const auto marked = ck_marked.load(Split::kTrain);
      LabeledImageDataset test = task ? task->test : (require(ck_test.path, "--test-data"), ck_test.load(Split::kTest));
      std::vector<TrainedModel> refs;
      for (const auto& r : ck_refs) refs.push_back(load_model(r));
      std::vector<NamedModel> named;
      for (std::size_t i = 0; i < refs.size(); ++i) named.push_back({ck_refs[i], &refs[i]});
      const auto rep = check_requirements(clean, marked_model, named, secret, {&marked, &test, &marker}, ck_cfg);
      std::fprintf(stderr, "utility %s (gap %.2f pp), effectiveness %s, integrity %s, stealthiness %s\n",
                   rep.utility.pass ? "pass" : "FAIL", rep.utility.gap_pp, rep.effectiveness.pass ? "pass" : "FAIL",
                   rep.integrity.pass ? "pass" : "FAIL", rep.stealthiness.pass ? "pass" : "FAIL");
      if (rep.effectiveness.no_watermark_effect) std::fprintf(stderr, "no watermark effect on the marked model\n");
      emit_json(to_json(rep), ck_out.empty() ? "-" : ck_out);
    } else if (*run) {
      const auto m = load_manifest(run_manifest);
      const auto summary = run_experiment(m, [](const std::string& stage, const std::string& status) {
        std::fprintf(stderr, "[%s] %s\n", stage.c_str(), status.c_str());
      });
      const auto bundle = build_report(summary.output_dir);
      std::cout << render_tables(bundle.report, isatty(STDOUT_FILENO) != 0);
    } else if (*report) {
      if (rep_dir.empty() && !rep_manifest.empty()) rep_dir = load_manifest(rep_manifest).output_dir;
      require(rep_dir, "--dir");
      const auto bundle = build_report(rep_dir);
      write_report_bundle(bundle, ExperimentPaths{rep_dir}.report_dir());
      if (rep_format == "json") {
        std::cout << bundle.report.dump(2) << "\n";
      } else if (rep_format == "csv") {
        std::cout << bundle.table1_csv << "\n" << bundle.table2_csv << "\n" << bundle.table3_csv << "\n" << bundle.sweep_csv;
      } else {
        std::cout << render_tables(bundle.report, rep_color);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "radmark: error: %s\n", e.what());
    return kExitError;
  }
  return kExitOk;
}
