#include "radmark/manifest.hpp"

#include <algorithm>
#include <set>

#include "radmark/architectures.hpp"
#include "radmark/binio.hpp"
#include "radmark/digest.hpp"
#include "radmark/error.hpp"

namespace radmark {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw SchemaError("manifest: " + where + " must be an object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw SchemaError("manifest: unknown field '" + where + (where.empty() ? "" : ".") + k + "'");
  }
}

json model_json(const ModelSpec& m) { return {{"architecture", m.architecture}, {"hyper", nn::to_json(m.hyper)}}; }

ModelSpec model_from(const json& j, const std::string& where) {
  reject_unknown(j, where, {"architecture", "hyper"});
  ModelSpec m;
  m.architecture = j.value("architecture", m.architecture);
  if (j.contains("hyper")) m.hyper = nn::train_hyper_from_json(j["hyper"]);
  return m;
}

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const ToyTaskConfig& c) {
  return {{"classes", c.classes},
          {"heldout_classes", c.heldout_classes},
          {"train_per_class", c.train_per_class},
          {"test_per_class", c.test_per_class},
          {"heldout_per_class", c.heldout_per_class},
          {"shape", {c.shape.channels, c.shape.height, c.shape.width}},
          {"clutter", c.clutter},
          {"pixel_noise", c.pixel_noise},
          {"seed", c.seed}};
}

ToyTaskConfig toy_config_from_json(const json& j) {
  reject_unknown(j, "dataset.toy",
                 {"classes", "heldout_classes", "train_per_class", "test_per_class", "heldout_per_class", "shape",
                  "clutter", "pixel_noise", "seed"});
  ToyTaskConfig c;
  c.classes = j.value("classes", c.classes);
  c.heldout_classes = j.value("heldout_classes", c.heldout_classes);
  c.train_per_class = j.value("train_per_class", c.train_per_class);
  c.test_per_class = j.value("test_per_class", c.test_per_class);
  c.heldout_per_class = j.value("heldout_per_class", c.heldout_per_class);
  if (j.contains("shape")) {
    const auto s = j["shape"].get<std::vector<int>>();
    if (s.size() != 3) throw SchemaError("manifest: dataset.toy.shape must be [C, H, W]");
    c.shape = {s[0], s[1], s[2]};
  }
  c.clutter = j.value("clutter", c.clutter);
  c.pixel_noise = j.value("pixel_noise", c.pixel_noise);
  c.seed = j.value("seed", c.seed);
  return c;
}

void ExperimentManifest::validate() const {
  if (schema_version != kManifestSchemaVersion) {
    throw UnsupportedSchemaError("manifest schema_version " + std::to_string(schema_version) + " is not supported");
  }
  if (dataset.format != "toy") {
    dataset_format_from_string(dataset.format);
    if (dataset.train_path.empty()) throw SchemaError("manifest: dataset.train_path is required for format " + dataset.format);
  }
  if (wm_ratios.empty()) throw SchemaError("manifest: wm_ratios is empty");
  for (double r : wm_ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw SchemaError("manifest: wm_ratio " + std::to_string(r) + " outside (0,1]");
  }
  try {
    embed.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("manifest: embed: ") + e.what());
  }
  const auto tags = architecture_tags();
  auto check_arch = [&](const ModelSpec& m, const std::string& role) {
    if (std::find(tags.begin(), tags.end(), m.architecture) == tags.end()) {
      throw SchemaError("manifest: " + role + ".architecture '" + m.architecture + "' is not supported");
    }
    if (m.hyper.epochs < 0 || m.hyper.batch_size <= 0 || m.hyper.warmup_epochs < 0) throw SchemaError("manifest: " + role + ".hyper is invalid");
  };
  check_arch(marker, "marker");
  check_arch(adversary, "adversary");
  for (std::size_t i = 0; i < references.size(); ++i) check_arch(references[i], "references[" + std::to_string(i) + "]");
  if (extraction.enabled) {
    check_arch(extraction.surrogate, "extraction.surrogate");
    if (extraction.budget == 0) throw SchemaError("manifest: extraction.budget must be positive");
    if (extraction.agreement_source != "test_split" && extraction.agreement_source != "pool_holdout") {
      throw SchemaError("manifest: extraction.agreement_source must be test_split or pool_holdout");
    }
  }
  if (!(verify.alpha > 0.0 && verify.alpha < 1.0)) throw SchemaError("manifest: verify.alpha outside (0,1)");
  if (!std::is_sorted(verify.budgets.begin(), verify.budgets.end())) {
    throw SchemaError("manifest: verify.budgets must be ascending");
  }
  if (output_dir.empty()) throw SchemaError("manifest: output_dir is empty");
}

json to_json(const ExperimentManifest& m) {
  json ds = {{"format", m.dataset.format},
             {"train_path", m.dataset.train_path},
             {"test_path", m.dataset.test_path},
             {"toy", to_json(m.dataset.toy)}};
  ds["subset"] = m.dataset.subset ? json{{"source_dataset_id", m.dataset.subset->source_dataset_id},
                                         {"classes", m.dataset.subset->class_indices}}
                                  : json(nullptr);
  json refs = json::array();
  for (const auto& r : m.references) refs.push_back(model_json(r));
  json sources = json::array();
  for (auto p : m.verify.probe_sources) sources.push_back(to_string(p));
  return {{"schema_version", m.schema_version},
          {"name", m.name},
          {"dataset", ds},
          {"wm_ratios", m.wm_ratios},
          {"selection_seed", m.selection_seed},
          {"carrier_seed", m.carrier_seed},
          {"embed", to_json(m.embed)},
          {"marker", model_json(m.marker)},
          {"adversary", model_json(m.adversary)},
          {"references", refs},
          {"extraction",
           {{"enabled", m.extraction.enabled},
            {"surrogate", model_json(m.extraction.surrogate)},
            {"pool_size", m.extraction.pool_size},
            {"budget", m.extraction.budget},
            {"heldout_queries", m.extraction.heldout_queries},
            {"agreement_source", m.extraction.agreement_source},
            {"hard_labels", m.extraction.hard_labels},
            {"agreement_floor", m.extraction.agreement_floor},
            {"seed", m.extraction.seed}}},
          {"verify",
           {{"alpha", m.verify.alpha},
            {"probe_sources", sources},
            {"budgets", m.verify.budgets},
            {"order_seed", m.verify.order_seed},
            {"comparison_space", to_string(m.verify.space)},
            {"center_weights", m.verify.center_weights}}},
          {"requirements",
           {{"max_gap_pp", m.requirements.max_gap_pp},
            {"min_psnr_db", opt_json(m.requirements.min_psnr_db)},
            {"max_linf", opt_json(m.requirements.max_linf)}}},
          {"robustness", {{"enabled", m.robustness.enabled}, {"transforms", m.robustness.transforms}}},
          {"output_dir", m.output_dir}};
}

ExperimentManifest manifest_from_json(const json& j) {
  ExperimentManifest m;
  try {
    reject_unknown(j, "",
                   {"schema_version", "name", "dataset", "wm_ratios", "selection_seed", "carrier_seed", "embed",
                    "marker", "adversary", "references", "extraction", "verify", "requirements", "robustness",
                    "output_dir"});
    m.schema_version = j.value("schema_version", 0);
    if (m.schema_version != kManifestSchemaVersion) {
      throw UnsupportedSchemaError("manifest schema_version " + std::to_string(m.schema_version) +
                                   " is not supported (expected " + std::to_string(kManifestSchemaVersion) + ")");
    }
    m.name = j.value("name", m.name);
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      reject_unknown(d, "dataset", {"format", "train_path", "test_path", "toy", "subset"});
      m.dataset.format = d.value("format", m.dataset.format);
      m.dataset.train_path = d.value("train_path", std::string());
      m.dataset.test_path = d.value("test_path", std::string());
      if (d.contains("toy")) m.dataset.toy = toy_config_from_json(d["toy"]);
      if (d.contains("subset") && !d["subset"].is_null()) {
        reject_unknown(d["subset"], "dataset.subset", {"source_dataset_id", "classes"});
        m.dataset.subset = ClassSubsetSpec{d["subset"].value("source_dataset_id", std::string()),
                                           d["subset"].at("classes").get<std::vector<int>>()};
      }
    }
    m.wm_ratios = j.value("wm_ratios", m.wm_ratios);
    m.selection_seed = j.value("selection_seed", m.selection_seed);
    m.carrier_seed = j.value("carrier_seed", m.carrier_seed);
    if (j.contains("embed")) {
      reject_unknown(j["embed"], "embed",
                     {"lambda_pixel", "lambda_feature", "steps", "step_size", "linf_budget", "quantize_8bit", "seed"});
      m.embed = embed_params_from_json(j["embed"]);
    }
    if (j.contains("marker")) m.marker = model_from(j["marker"], "marker");
    if (j.contains("adversary")) m.adversary = model_from(j["adversary"], "adversary");
    if (j.contains("references")) {
      for (std::size_t i = 0; i < j["references"].size(); ++i) {
        m.references.push_back(model_from(j["references"][i], "references[" + std::to_string(i) + "]"));
      }
    }
    if (j.contains("extraction")) {
      const auto& e = j["extraction"];
      reject_unknown(e, "extraction",
                     {"enabled", "surrogate", "pool_size", "budget", "heldout_queries", "agreement_source",
                      "hard_labels", "agreement_floor", "seed"});
      m.extraction.enabled = e.value("enabled", false);
      if (e.contains("surrogate")) m.extraction.surrogate = model_from(e["surrogate"], "extraction.surrogate");
      m.extraction.pool_size = e.value("pool_size", m.extraction.pool_size);
      m.extraction.budget = e.value("budget", m.extraction.budget);
      m.extraction.heldout_queries = e.value("heldout_queries", m.extraction.heldout_queries);
      m.extraction.agreement_source = e.value("agreement_source", m.extraction.agreement_source);
      m.extraction.hard_labels = e.value("hard_labels", m.extraction.hard_labels);
      m.extraction.agreement_floor = e.value("agreement_floor", m.extraction.agreement_floor);
      m.extraction.seed = e.value("seed", m.extraction.seed);
    }
    if (j.contains("verify")) {
      const auto& v = j["verify"];
      reject_unknown(v, "verify", {"alpha", "probe_sources", "budgets", "order_seed", "comparison_space", "center_weights"});
      m.verify.alpha = v.value("alpha", m.verify.alpha);
      if (v.contains("probe_sources")) {
        m.verify.probe_sources.clear();
        for (const auto& s : v["probe_sources"]) m.verify.probe_sources.push_back(probe_source_from_string(s.get<std::string>()));
      }
      m.verify.budgets = v.value("budgets", m.verify.budgets);
      m.verify.order_seed = v.value("order_seed", m.verify.order_seed);
      if (v.contains("comparison_space")) m.verify.space = comparison_space_from_string(v["comparison_space"].get<std::string>());
      m.verify.center_weights = v.value("center_weights", m.verify.center_weights);
    }
    if (j.contains("requirements")) {
      const auto& r = j["requirements"];
      reject_unknown(r, "requirements", {"max_gap_pp", "min_psnr_db", "max_linf"});
      m.requirements.max_gap_pp = r.value("max_gap_pp", m.requirements.max_gap_pp);
      m.requirements.min_psnr_db = opt<double>(r, "min_psnr_db");
      m.requirements.max_linf = opt<double>(r, "max_linf");
    }
    if (j.contains("robustness")) {
      const auto& r = j["robustness"];
      reject_unknown(r, "robustness", {"enabled", "transforms"});
      m.robustness.enabled = r.value("enabled", false);
      m.robustness.transforms = r.value("transforms", m.robustness.transforms);
    }
    m.output_dir = j.value("output_dir", m.output_dir);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

ExperimentManifest load_manifest(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file_text(path));
  } catch (const json::exception& e) {
    throw SchemaError(path + ": not valid JSON: " + e.what());
  }
  return manifest_from_json(j);
}

void save_manifest(const ExperimentManifest& m, const std::string& path) {
  write_file_text_atomic(path, to_json(m).dump(2) + "\n");
}

std::string manifest_digest(const ExperimentManifest& m) { return sha256_hex(to_json(m).dump()); }

}  // namespace radmark
