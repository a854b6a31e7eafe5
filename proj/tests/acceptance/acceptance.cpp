// Acceptance checks AC-1..AC-11. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Pipeline artifacts are cached under
// $RADMARK_CACHE_DIR/acceptance so reruns only pay for verification.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "radmark/architectures.hpp"
#include "radmark/binio.hpp"
#include "radmark/carriers.hpp"
#include "radmark/extraction.hpp"
#include "radmark/harness.hpp"
#include "radmark/marker.hpp"
#include "radmark/nn/layers.hpp"
#include "radmark/profile.hpp"
#include "radmark/toy_data.hpp"
#include "radmark/verify.hpp"

using namespace radmark;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kSeeds = 5;
constexpr int kMajority = 4;  // "in >= 4 of 5 seeds"
constexpr double kAlpha = 0.05;
constexpr const char* kPipelineCriteria[] = {"AC-3", "AC-4", "AC-5", "AC-6", "AC-8", "AC-9", "AC-11"};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[2048];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// AC-1

Outcome ac1_statistics() {
  constexpr std::size_t kSamples = 1'000'000;
  bool ok = true;
  double worst_z = 0.0;
  std::string where;
  for (int d : {2, 3, 8, 64, 512}) {
    auto s = mc_null_samples(d, kSamples, 20240 + static_cast<std::uint64_t>(d));
    std::sort(s.begin(), s.end());
    for (int k = 0; k < 99; ++k) {
      const double c = (k - 49) / 50.0;
      const double p = cosine_pvalue(c, d);
      const auto above = static_cast<double>(s.end() - std::lower_bound(s.begin(), s.end(), c));
      const double phat = above / static_cast<double>(kSamples);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(kSamples));
      const double dev = std::abs(phat - p);
      const bool within = dev <= 3.0 * se;
      if (se > 0.0 && dev / se > worst_z) {
        worst_z = dev / se;
        where = fmt("d=%d c=%.2f", d, c);
      }
      if (!within) {
        ok = false;
        where = fmt("d=%d c=%.2f p=%.3e phat=%.3e", d, c, p, phat);
      }
      if (d == 2 && std::abs(p - std::acos(c) / std::numbers::pi) > 1e-9) ok = false;
      if (d == 3 && std::abs(p - (1.0 - c) / 2.0) > 1e-9) ok = false;
    }
  }
  return {ok, fmt("max |phat-p|/se = %.2f (%s); closed forms d=2,3 to 1e-9", worst_z, where.c_str())};
}

// ---------------------------------------------------------------------------
// AC-2

nn::Network toy_extractor(int d) {
  nn::Sequential body;
  body.add<nn::Conv2d>(3, 8).add<nn::Tanh>().add<nn::MaxPool2>().add<nn::Flatten>().add<nn::Linear>(8 * 8 * 8, d);
  body.add<nn::Tanh>();
  nn::Network net("toy_extractor", {3, 16, 16}, std::move(body), 2);
  net.init(7);
  return net;
}

Outcome ac2_alignment() {
  constexpr int d = 64;
  const auto phi = toy_extractor(d);
  const auto probe = make_natural_pool(512, {3, 16, 16}, 8);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
  LinearlyMappedFeatures rotated(phi, q);
  AlignOptions strict;
  strict.allow_ridge = false;
  const auto m = align_features(rotated, phi, probe, strict);
  const auto self = align_features(phi, phi, probe, strict);
  const double rec = (m.matrix - q).norm() / q.norm();
  const double id = (self.matrix - Eigen::MatrixXd::Identity(d, d)).norm() / std::sqrt(static_cast<double>(d));
  return {rec <= 1e-3 && id <= 1e-3, fmt("orthogonal recovery %.2e, self-alignment %.2e (limit 1e-3)", rec, id)};
}

// ---------------------------------------------------------------------------
// AC-7

Outcome ac7_gradient() {
  const ImageShape shape{3, 8, 8};
  auto net = build_architecture("tiny_smooth", shape, 3);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    net.init(100 + static_cast<std::uint64_t>(t));
    std::mt19937_64 rng(200 + static_cast<std::uint64_t>(t));
    std::uniform_real_distribution<float> u(0.1f, 0.9f), du(-0.05f, 0.05f);
    std::uniform_real_distribution<double> lam(0.0, 1.0);
    Image x(shape.size()), xt(shape.size());
    for (int i = 0; i < x.size(); ++i) {
      x[i] = u(rng);
      xt[i] = x[i] + du(rng);
    }
    EmbedParams p;
    p.lambda_pixel = lam(rng);
    p.lambda_feature = lam(rng);
    const Eigen::VectorXd carrier = generate_carriers(1, net.feature_dim(), 300 + static_cast<std::uint64_t>(t)).vectors.row(0);
    const Eigen::VectorXd g = mark_objective_gradient(net, x, xt, carrier, p);
    Eigen::VectorXd fd(g.size());
    for (int i = 0; i < xt.size(); ++i) {
      Image a = xt, b = xt;
      a[i] += 1e-3f;
      b[i] -= 1e-3f;
      fd[i] = (mark_objective(net, x, a, carrier, p) - mark_objective(net, x, b, carrier, p)) /
              (static_cast<double>(a[i]) - static_cast<double>(b[i]));
    }
    worst = std::max(worst, (g - fd).norm() / fd.norm());
  }
  return {worst <= 1e-3, fmt("max relative error %.2e over 10 cases (limit 1e-3)", worst)};
}

// ---------------------------------------------------------------------------
// AC-10

Outcome ac10_published_values() {
  struct Cell {
    double value;
    VerifyMethod method;
    bool expected;  // what a correct verifier should decide for this row
    bool green;     // colour printed in the published table
  };
  const auto wbt = VerifyMethod::kWhiteboxTestProbe, bb = VerifyMethod::kBlackbox, wbm = VerifyMethod::kWhiteboxMarkedProbe;
  std::vector<Cell> cells;
  auto row = [&](bool marked, double a, double b, double c, bool ga, bool gb, bool gc) {
    cells.push_back({a, wbt, marked, ga});
    cells.push_back({b, bb, marked, gb});
    cells.push_back({c, wbm, marked, gc});
  };
  // Clean-data classification results, marker rows first.
  row(false, -0.480, -0.275, -0.480, true, true, true);
  row(true, -2.804, 0.171, -9.563, true, true, true);
  row(true, -1.835, 0.260, -12.098, true, true, true);
  row(false, -0.508, -3.430, -0.508, true, true, true);
  row(true, -0.484, 0.022, -0.386, false, true, false);
  row(true, -0.249, 0.023, -0.863, false, true, false);
  row(false, -0.361, -0.667, -0.361, true, true, true);
  row(true, -0.411, 0.048, -3.214, false, true, true);
  row(true, -0.266, 0.057, -9.177, false, true, true);
  row(false, -0.396, -0.992, -0.396, true, true, true);
  row(true, -1.614, 0.077, -21.317, true, true, true);
  row(true, -5.779, 0.172, -26.183, true, true, true);
  row(false, -0.176, -2.098, -0.176, true, true, true);
  row(true, -4.894, 0.277, -72.113, true, true, true);
  row(true, -9.556, 0.467, -102.160, true, true, true);
  // Reference models: never accused.
  row(false, -0.284, -2.906, -0.337, true, true, true);
  row(false, -0.272, -0.168, -0.266, true, true, true);
  row(false, -0.910, -2.570, -0.842, true, true, true);
  // Surrogates of marked models.
  row(true, -1.537, 0.160, -4.042, true, true, true);
  row(true, -2.327, 0.240, -3.256, true, true, true);
  row(true, -0.150, 0.034, -0.561, false, true, false);
  row(true, -0.132, 0.062, -1.013, false, true, false);
  row(true, -0.259, 0.002, -1.453, false, true, true);
  row(true, -0.908, 0.071, -1.490, false, true, true);
  row(true, -1.185, -0.020, -1.756, false, false, true);
  row(true, -3.345, 0.143, -3.819, true, true, true);
  row(true, -2.622, -0.033, -8.276, true, false, true);
  row(true, -4.364, 0.198, -19.274, true, true, true);

  const double wb_threshold = std::log10(kAlpha);
  int mismatches = 0;
  for (const auto& c : cells) {
    const double thr = c.method == bb ? 0.0 : wb_threshold;
    const bool decision = decide(c.method, c.value, thr);
    if ((decision == c.expected) != c.green) ++mismatches;
  }
  const bool named = decide(wbm, -9.563, wb_threshold) && !decide(wbt, -0.480, wb_threshold) &&
                     decide(bb, 0.171, 0.0) && !decide(bb, -0.275, 0.0) && !decide(bb, -0.020, 0.0);
  return {mismatches == 0 && named,
          fmt("%zu published cells, %d colour mismatches; named examples %s", cells.size(), mismatches,
              named ? "match" : "differ")};
}

// ---------------------------------------------------------------------------
// Pipeline (AC-3..AC-6, AC-8, AC-9, AC-11)

ExperimentManifest pipeline_manifest(int seed) {
  const auto s = static_cast<std::uint64_t>(seed);
  ExperimentManifest m;
  m.name = "acceptance-seed-" + std::to_string(seed);
  m.dataset.toy.seed = s;
  m.wm_ratios = {0.2};
  m.selection_seed = s;
  m.carrier_seed = 100 + s;
  m.marker.hyper.seed = 1000 + s;
  m.adversary.hyper.seed = 2000 + s;
  ModelSpec ref;
  ref.architecture = "residual";
  ref.hyper.seed = 3000 + s;
  m.references = {ref};
  m.extraction.enabled = true;
  m.extraction.surrogate.hyper.seed = 4000 + s;
  m.extraction.seed = 5000 + s;
  m.verify.order_seed = 6000 + s;
  m.output_dir = (fs::path(cache_dir()) / "acceptance" / ("seed_" + std::to_string(seed))).string();
  return m;
}

struct SeedRun {
  ExperimentManifest manifest;
  json results;
  json extraction;
};

json read_json(const std::string& path) { return json::parse(read_file_text(path)); }

std::vector<SeedRun> run_pipelines() {
  std::vector<SeedRun> runs;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    SeedRun r;
    r.manifest = pipeline_manifest(seed);
    const auto t0 = std::chrono::steady_clock::now();
    run_experiment(r.manifest, [&](const std::string& stage, const std::string& status) {
      if (status != "loading") std::fprintf(stderr, "  seed %d %-20s %s\n", seed, stage.c_str(), status.c_str());
    });
    std::fprintf(stderr, "  seed %d pipeline %.0fs\n", seed,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    const ExperimentPaths paths{r.manifest.output_dir};
    r.results = read_json(paths.results(0.2));
    r.extraction = read_json(paths.extraction(0.2));
    runs.push_back(std::move(r));
  }
  return runs;
}

const json& eff_verdicts(const SeedRun& r) { return r.results["requirements"]["effectiveness"]["verdicts"]; }

Outcome ac3_effectiveness(const std::vector<SeedRun>& runs) {
  int hits = 0;
  std::ostringstream os;
  for (const auto& r : runs) {
    const auto& v = eff_verdicts(r);
    const double bb = v["blackbox"]["statistic"];
    const double wb = v["whitebox_marked_probe"]["statistic"];
    const bool ok = bb > 0.0 && wb <= std::log10(kAlpha);
    hits += ok ? 1 : 0;
    os << fmt(" [bb %+.4f wb %.2f]", bb, wb);
  }
  return {hits >= kMajority, fmt("%d/5 seeds detected;", hits) + os.str()};
}

Outcome ac4_integrity(const std::vector<SeedRun>& runs) {
  int bb_false = 0;
  int fa_test = 0, fa_marked = 0, trials = 0, trained = 0;
  std::ostringstream os, real_wb, accs;
  for (const auto& r : runs) {
    const auto& ref_model = r.results["requirements"]["integrity"]["models"][0];
    const auto& ref = ref_model["verdicts"];
    // A constant predictor answers False for free; require a working reference.
    const double ref_acc = ref_model["accuracy"];
    trained += ref_acc >= 200.0 / r.manifest.dataset.toy.classes ? 1 : 0;
    accs << fmt(" %.1f", ref_acc);
    bb_false += ref["blackbox"]["decision"].get<bool>() ? 0 : 1;
    os << fmt(" %+.3f", ref["blackbox"]["statistic"].get<double>());
    real_wb << fmt(" %.2f", ref["whitebox_marked_probe"]["statistic"].get<double>());

    // Fresh carriers against the reference model: the null hypothesis holds by construction.
    const ExperimentPaths paths{r.manifest.output_dir};
    const auto marker = load_model(paths.marker_model());
    const auto reference = load_model(paths.reference_model(0));
    const auto data = load_task_data(r.manifest.dataset);
    const auto marked = load_dataset(paths.marked_train(0.2), DatasetFormat::kArchive);
    auto secret = load_secret(paths.secret(0.2));
    const auto probe = marked_probe_images(secret, marked);
    WhiteBoxOptions opt;
    opt.alpha = r.manifest.verify.alpha;
    opt.space = r.manifest.verify.space;
    opt.center_weights = r.manifest.verify.center_weights;
    const auto suspect = WhiteBoxSuspect::from_model(reference);
    for (int t = 0; t < 4; ++t) {
      secret.carriers = generate_carriers(secret.carriers.class_count(), secret.carriers.feature_dim(),
                                          900'000 + 10 * r.manifest.dataset.toy.seed + static_cast<std::uint64_t>(t));
      fa_test += whitebox_verify(suspect, secret, marker, ProbeSource::kTestSet, data.test.images, opt).decision;
      fa_marked += whitebox_verify(suspect, secret, marker, ProbeSource::kMarkedSet, probe, opt).decision;
      ++trials;
    }
  }
  const int limit = static_cast<int>(std::floor(2.0 * kAlpha * trials + 1e-9));
  const bool ok = trained == kSeeds && bb_false == kSeeds && fa_test <= limit && fa_marked <= limit;
  return {ok, fmt("reference accuracy %%:%s (>= 2x chance in %d/5); black-box False in %d/5 (stats%s); white-box false accusations %d (test probe), %d (marked probe) "
                  "of %d fresh-carrier trials, limit %d; real-carrier marked-probe log10 p (informational):%s",
                  accs.str().c_str(), trained, bb_false, os.str().c_str(), fa_test, fa_marked, trials, limit,
                  real_wb.str().c_str())};
}

Outcome ac5_marked_probe(const std::vector<SeedRun>& runs) {
  int hits = 0;
  std::ostringstream os;
  for (const auto& r : runs) {
    const auto& v = eff_verdicts(r);
    const double wm = v["whitebox_marked_probe"]["statistic"], wt = v["whitebox_test_probe"]["statistic"];
    hits += wm <= wt ? 1 : 0;
    os << fmt(" [%.2f vs %.2f]", wm, wt);
  }
  return {hits >= kMajority, fmt("marked probe <= test probe in %d/5;", hits) + os.str()};
}

Outcome ac6_utility(const std::vector<SeedRun>& runs) {
  int ok = 0;
  std::ostringstream os;
  for (const auto& r : runs) {
    const auto& u = r.results["requirements"]["utility"];
    const double gap = u["gap_pp"];
    ok += gap <= 5.0 ? 1 : 0;
    os << fmt(" %.2f", gap);
  }
  return {ok == kSeeds, fmt("gap within 5 pp in %d/5 seeds (pp:%s)", ok, os.str().c_str())};
}

Outcome ac8_extraction(const std::vector<SeedRun>& runs) {
  int agreeing = 0, surviving = 0;
  std::ostringstream os;
  for (const auto& r : runs) {
    const auto& s = r.extraction["survival"];
    const double agreement = s["agreement"];
    const double bb = s["surrogate"]["blackbox"]["statistic"];
    agreeing += agreement >= 0.90 ? 1 : 0;
    surviving += (agreement >= 0.90 && bb > 0.0) ? 1 : 0;
    os << fmt(" [agree %.3f bb %+.4f]", agreement, bb);
  }

  // Under-budget distillation must land in the flagged regime.
  const auto& first = runs.front();
  const ExperimentPaths paths{first.manifest.output_dir};
  const auto victim = load_model(paths.marked_model(0.2));
  const auto marker = load_model(paths.marker_model());
  const auto data = load_task_data(first.manifest.dataset);
  const auto marked = load_dataset(paths.marked_train(0.2), DatasetFormat::kArchive);
  const auto secret = load_secret(paths.secret(0.2));
  const auto pools = make_extraction_pools(data, first.manifest.extraction);
  const auto transfer = build_transfer_set(BlackBoxSuspect::from_model(victim, victim.weights_digest()), pools.pool,
                                           data.train.shape, 60, 77);
  auto hyper = first.manifest.extraction.surrogate.hyper;
  hyper.epochs = 2;
  const auto weak = train_surrogate(transfer, first.manifest.extraction.surrogate.architecture, hyper);
  SurvivalInputs in;
  in.secret = &secret;
  in.marked = &marked;
  in.test = &data.test;
  in.marker_fn = &marker;
  in.heldout_queries = agreement_queries(data, pools, first.manifest.extraction);
  in.order_seed = first.manifest.verify.order_seed;
  in.whitebox.space = first.manifest.verify.space;
  in.agreement_floor = first.manifest.extraction.agreement_floor;
  const auto under = extraction_survival_report(victim, weak, in);
  const bool flagged = under.agreement < 0.70 && under.failure_regime;

  const bool ok = surviving >= kMajority && flagged;
  return {ok, fmt("agreement >= 0.90 in %d/5, surrogate black-box > 0 among them %d/5;", agreeing, surviving) +
                  os.str() +
                  fmt("; under-budget run agreement %.3f gap %.2f pp flagged=%s", under.agreement,
                      under.accuracy_gap_pp, under.failure_regime ? "yes" : "no")};
}

Outcome ac9_sweep(const std::vector<SeedRun>& runs) {
  bool exact = true;
  int small = 0;
  std::ostringstream os;
  for (const auto& r : runs) {
    const ExperimentPaths paths{r.manifest.output_dir};
    const auto victim = load_model(paths.marked_model(0.2));
    const auto marked = load_dataset(paths.marked_train(0.2), DatasetFormat::kArchive);
    const auto secret = load_secret(paths.secret(0.2));
    const auto pairs = marked_pairs(secret, marked, r.manifest.verify.order_seed);
    const auto suspect = BlackBoxSuspect::from_model(victim, victim.weights_digest());
    const auto budgets = default_budgets(pairs.size());
    const auto sweep = blackbox_sample_sweep(suspect, pairs, budgets);
    for (const auto& p : sweep) {
      const auto v = blackbox_verify(suspect, pairs, p.budget);
      if (v.statistic != p.statistic || v.decision != p.decision) exact = false;
    }
    const auto best = smallest_sufficient_budget(sweep);
    const bool ok = best && *best * 2 <= pairs.size();
    small += ok ? 1 : 0;
    os << " " << (best ? std::to_string(*best) : std::string("none")) << "/" << pairs.size();
  }
  return {exact && small >= kMajority,
          fmt("prefix identity %s; smallest sufficient budget <= half in %d/5 (", exact ? "bit-exact" : "BROKEN", small) +
              os.str() + " )"};
}

Outcome ac11_round_trips(const std::vector<SeedRun>& runs) {
  bool ok = current_profile() == ComputeProfile::kDeterministic;
  const ExperimentPaths paths{runs.front().manifest.output_dir};
  const auto scratch = fs::temp_directory_path() / "radmark_acceptance_rt";
  fs::create_directories(scratch);

  const auto secret_bytes = read_file_bytes(paths.secret(0.2));
  const auto secret = load_secret(paths.secret(0.2));
  ok = ok && encode_secret(secret) == secret_bytes;
  save_secret(secret, (scratch / "s.rmrk").string());
  ok = ok && read_file_bytes((scratch / "s.rmrk").string()) == secret_bytes;

  const auto model = load_model(paths.marked_model(0.2));
  save_model(model, (scratch / "m.rmdl").string());
  ok = ok && read_file_bytes((scratch / "m.rmdl").string()) == read_file_bytes(paths.marked_model(0.2));
  ok = ok && load_model((scratch / "m.rmdl").string()).weights_digest() == model.weights_digest();

  const auto manifest = load_manifest((fs::path(paths.root) / "manifest.json").string());
  save_manifest(manifest, (scratch / "manifest.json").string());
  ok = ok && manifest_digest(load_manifest((scratch / "manifest.json").string())) == manifest_digest(runs.front().manifest);

  // Regeneration on the deterministic profile reproduces digests.
  ToyTaskConfig toy;
  toy.classes = 2;
  toy.train_per_class = 16;
  toy.test_per_class = 2;
  toy.heldout_per_class = 1;
  toy.shape = {3, 8, 8};
  const auto task = make_toy_task(toy);
  nn::TrainHyper h;
  h.epochs = 2;
  h.batch_size = 8;
  const auto a = train_classifier(task.train, "tiny_smooth", h);
  const auto b = train_classifier(task.train, "tiny_smooth", h);
  EmbedParams p;
  p.steps = 5;
  const auto sel = select_marking_targets(task.train, 0.25, 3);
  const auto carriers = generate_carriers(2, a.feature_dim(), 4);
  const auto s1 = mark_dataset(task.train, sel, carriers, a, p, a.weights_digest()).secret;
  const auto s2 = mark_dataset(task.train, sel, carriers, b, p, b.weights_digest()).secret;
  ok = ok && a.weights_digest() == b.weights_digest() && secret_digest(s1) == secret_digest(s2);
  fs::remove_all(scratch);
  return {ok, fmt("secret, model container and manifest round-trip byte-identically; retraining and re-marking "
                  "reproduce digests (profile %s)",
                  to_string(current_profile()).c_str())};
}

}  // namespace

// Usage: radmark_acceptance [AC-n ...]   (no arguments runs every criterion)
int main(int argc, char** argv) {
  tune_allocator();
  const std::set<std::string> only(argv + 1, argv + argc);
  auto wanted = [&](const std::string& id) { return only.empty() || only.contains(id); };
  std::vector<std::pair<std::string, Outcome>> out;
  auto run = [&](const std::string& id, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%-6s %s  %s (%.1fs)\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    out.emplace_back(id, o);
  };

  run("AC-1", ac1_statistics);
  run("AC-2", ac2_alignment);
  run("AC-7", ac7_gradient);
  run("AC-10", ac10_published_values);

  std::vector<SeedRun> runs;
  std::string pipeline_error;
  const bool need_pipeline = std::any_of(std::begin(kPipelineCriteria), std::end(kPipelineCriteria), wanted);
  if (need_pipeline) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      runs = run_pipelines();
    } catch (const std::exception& e) {
      pipeline_error = e.what();
    }
    std::fprintf(stderr, "  pipelines ready after %.0fs\n",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  auto with_runs = [&](Outcome (*fn)(const std::vector<SeedRun>&)) {
    return [&, fn] {
      if (runs.empty()) return Outcome{false, "pipeline failed: " + pipeline_error};
      return fn(runs);
    };
  };
  run("AC-3", with_runs(ac3_effectiveness));
  run("AC-4", with_runs(ac4_integrity));
  run("AC-5", with_runs(ac5_marked_probe));
  run("AC-6", with_runs(ac6_utility));
  run("AC-8", with_runs(ac8_extraction));
  run("AC-9", with_runs(ac9_sweep));
  run("AC-11", with_runs(ac11_round_trips));

  int failed = 0;
  for (const auto& [id, o] : out) failed += o.pass ? 0 : 1;
  std::printf("%d of %zu acceptance criteria passed\n", static_cast<int>(out.size()) - failed, out.size());
  return failed == 0 ? 0 : 1;
}
