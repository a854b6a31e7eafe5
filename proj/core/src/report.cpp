#include "radmark/report.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "radmark/binio.hpp"
#include "radmark/error.hpp"
#include "radmark/harness.hpp"
#include "radmark/manifest.hpp"

namespace radmark {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  try {
    return json::parse(read_file_text(path));
  } catch (const json::exception& e) {
    throw CorruptionError(path + ": " + e.what());
  }
}

json brief(const json& verdict) {
  return {{"statistic", verdict.at("statistic")}, {"threshold", verdict.at("threshold")},
          {"decision", verdict.at("decision")}};
}

json verdict_columns(const json& v) {
  return {{"whitebox_test_probe", brief(v.at("whitebox_test_probe"))},
          {"blackbox", brief(v.at("blackbox"))},
          {"whitebox_marked_probe", brief(v.at("whitebox_marked_probe"))}};
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return num(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string csv_line(const std::vector<json>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cell(cells[i]);
  }
  return s + "\n";
}

const char* kVerdictHeader =
    "accuracy,wb_test_log10p,wb_test_decision,bb_statistic,bb_decision,wb_marked_log10p,wb_marked_decision";

std::vector<json> verdict_cells(const json& row) {
  const auto& v = row.at("verdicts");
  return {row.at("accuracy"),
          v["whitebox_test_probe"]["statistic"],
          v["whitebox_test_probe"]["decision"],
          v["blackbox"]["statistic"],
          v["blackbox"]["decision"],
          v["whitebox_marked_probe"]["statistic"],
          v["whitebox_marked_probe"]["decision"]};
}

}  // namespace

ReportBundle build_report(const std::string& output_dir) {
  const auto manifest = load_manifest((fs::path(output_dir) / "manifest.json").string());
  ExperimentPaths paths{output_dir};
  json t1 = json::array(), t2 = json::array(), t3 = json::array(), sweep = json::array(), reqs = json::array();
  for (double ratio : manifest.wm_ratios) {
    const json res = read_json(paths.results(ratio));
    const auto& rq = res.at("requirements");
    const auto& clean = res.at("clean_model");
    t1.push_back({{"dataset", res.at("dataset")}, {"row", "clean"}, {"wm_ratio", ratio},
                  {"architecture", clean.at("architecture")}, {"accuracy", clean.at("accuracy")},
                  {"expected", false}, {"verdicts", verdict_columns(clean.at("verdicts"))}});
    t1.push_back({{"dataset", res.at("dataset")}, {"row", "marked"}, {"wm_ratio", ratio},
                  {"architecture", manifest.adversary.architecture}, {"accuracy", rq["utility"]["acc_marked"]},
                  {"expected", true}, {"verdicts", verdict_columns(rq["effectiveness"]["verdicts"])}});
    for (const auto& m : rq["integrity"]["models"]) {
      t2.push_back({{"dataset", res.at("dataset")}, {"wm_ratio", ratio}, {"model", m.at("name")},
                    {"architecture", m.at("architecture")}, {"accuracy", m.at("accuracy")}, {"expected", false},
                    {"verdicts", verdict_columns(m.at("verdicts"))}});
    }
    for (const auto& p : rq["effectiveness"]["sweep"]) {
      sweep.push_back({{"wm_ratio", ratio}, {"budget", p.at("budget")}, {"statistic", p.at("statistic")},
                       {"decision", p.at("decision")}});
    }
    reqs.push_back({{"wm_ratio", ratio},
                    {"utility", rq.at("utility")},
                    {"effectiveness_pass", rq["effectiveness"]["pass"]},
                    {"no_watermark_effect", rq["effectiveness"]["no_watermark_effect"]},
                    {"smallest_sufficient_budget", rq["effectiveness"]["smallest_sufficient_budget"]},
                    {"pair_count", rq["effectiveness"]["pair_count"]},
                    {"integrity_pass", rq["integrity"]["pass"]},
                    {"stealthiness", rq.at("stealthiness")},
                    {"robustness", rq.at("robustness")}});
    if (manifest.extraction.enabled) {
      const json ex = read_json(paths.extraction(ratio));
      const auto& s = ex.at("survival");
      t3.push_back({{"dataset", ex.at("dataset")},
                    {"wm_ratio", ratio},
                    {"transfer_size", ex.at("transfer_size")},
                    {"victim_accuracy", 100.0 * s["victim"]["accuracy"].get<double>()},
                    {"surrogate_accuracy", 100.0 * s["surrogate"]["accuracy"].get<double>()},
                    {"accuracy_gap_pp", s.at("accuracy_gap_pp")},
                    {"agreement", s.at("agreement")},
                    {"failure_regime", s.at("failure_regime")},
                    {"victim_blackbox", brief(s["victim"]["blackbox"])},
                    {"surrogate_blackbox", brief(s["surrogate"]["blackbox"])},
                    {"surrogate_whitebox_marked_probe", brief(s["surrogate"]["whitebox_marked_probe"])}});
    }
  }

  ReportBundle b;
  b.report = {{"report_schema", "radmark-report/1"},
              {"name", manifest.name},
              {"manifest_digest", manifest_digest(manifest)},
              {"alpha", manifest.verify.alpha},
              {"table1", t1},
              {"table2", t2},
              {"table3", t3},
              {"sweep", sweep},
              {"requirements", reqs}};

  std::string c1 = std::string("dataset,row,wm_ratio,architecture,") + kVerdictHeader + "\n";
  for (const auto& r : t1) {
    auto cells = std::vector<json>{r["dataset"], r["row"], r["wm_ratio"], r["architecture"]};
    for (auto& c : verdict_cells(r)) cells.push_back(c);
    c1 += csv_line(cells);
  }
  std::string c2 = std::string("dataset,wm_ratio,model,architecture,") + kVerdictHeader + "\n";
  for (const auto& r : t2) {
    auto cells = std::vector<json>{r["dataset"], r["wm_ratio"], r["model"], r["architecture"]};
    for (auto& c : verdict_cells(r)) cells.push_back(c);
    c2 += csv_line(cells);
  }
  std::string c3 =
      "dataset,wm_ratio,transfer_size,victim_accuracy,surrogate_accuracy,accuracy_gap_pp,agreement,failure_regime,"
      "victim_bb_statistic,victim_bb_decision,surrogate_bb_statistic,surrogate_bb_decision,"
      "surrogate_wb_marked_log10p,surrogate_wb_marked_decision\n";
  for (const auto& r : t3) {
    c3 += csv_line({r["dataset"], r["wm_ratio"], r["transfer_size"], r["victim_accuracy"], r["surrogate_accuracy"],
                    r["accuracy_gap_pp"], r["agreement"], r["failure_regime"], r["victim_blackbox"]["statistic"],
                    r["victim_blackbox"]["decision"], r["surrogate_blackbox"]["statistic"],
                    r["surrogate_blackbox"]["decision"], r["surrogate_whitebox_marked_probe"]["statistic"],
                    r["surrogate_whitebox_marked_probe"]["decision"]});
  }
  std::string cs = "wm_ratio,budget,statistic,decision\n";
  for (const auto& r : sweep) cs += csv_line({r["wm_ratio"], r["budget"], r["statistic"], r["decision"]});
  b.table1_csv = std::move(c1);
  b.table2_csv = std::move(c2);
  b.table3_csv = std::move(c3);
  b.sweep_csv = std::move(cs);
  return b;
}

void write_report_bundle(const ReportBundle& b, const std::string& dir) {
  fs::create_directories(dir);
  write_file_text_atomic((fs::path(dir) / "report.json").string(), b.report.dump(2) + "\n");
  write_file_text_atomic((fs::path(dir) / "table1.csv").string(), b.table1_csv);
  write_file_text_atomic((fs::path(dir) / "table2.csv").string(), b.table2_csv);
  write_file_text_atomic((fs::path(dir) / "table3.csv").string(), b.table3_csv);
  write_file_text_atomic((fs::path(dir) / "sweep.csv").string(), b.sweep_csv);
}

namespace {

std::string paint(const std::string& text, bool decision, bool expected, bool color) {
  if (!color) return text;
  return std::string(decision == expected ? "\033[32m" : "\033[31m") + text + "\033[0m";
}

std::string verdict_cell(const json& v, bool expected, bool color, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%*.3f %-5s", width - 6, v["statistic"].get<double>(),
                v["decision"].get<bool>() ? "True" : "False");
  return paint(buf, v["decision"].get<bool>(), expected, color);
}

void verdict_table(std::ostringstream& os, const json& rows, const std::string& label_key, bool color) {
  char head[160];
  std::snprintf(head, sizeof head, "%-28s %8s %16s %16s %16s\n", "model", "acc%", "wb(test) log10p", "bb loss diff",
                "wb(marked) log10p");
  os << head;
  for (const auto& r : rows) {
    std::string label = r[label_key].get<std::string>();
    if (r.contains("wm_ratio")) label += " @" + num(r["wm_ratio"].get<double>());
    char lead[64];
    std::snprintf(lead, sizeof lead, "%-28s %8.2f ", label.substr(0, 28).c_str(), r["accuracy"].get<double>());
    const bool expected = r["expected"].get<bool>();
    const auto& v = r["verdicts"];
    os << lead << verdict_cell(v["whitebox_test_probe"], expected, color, 16) << " "
       << verdict_cell(v["blackbox"], expected, color, 16) << " "
       << verdict_cell(v["whitebox_marked_probe"], expected, color, 16) << "\n";
  }
}

}  // namespace

std::string render_tables(const json& report, bool color) {
  std::ostringstream os;
  os << "== effectiveness (marked vs clean models) ==\n";
  verdict_table(os, report.at("table1"), "row", color);
  if (!report.at("table2").empty()) {
    os << "\n== integrity (reference models) ==\n";
    verdict_table(os, report.at("table2"), "model", color);
  }
  if (!report.at("table3").empty()) {
    os << "\n== extraction ==\n";
    for (const auto& r : report["table3"]) {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "ratio %-6s victim %.2f%%  surrogate %.2f%%  gap %.2f pp  agreement %.3f  bb victim %.3f  bb "
                    "surrogate ",
                    num(r["wm_ratio"].get<double>()).c_str(), r["victim_accuracy"].get<double>(),
                    r["surrogate_accuracy"].get<double>(), r["accuracy_gap_pp"].get<double>(),
                    r["agreement"].get<double>(), r["victim_blackbox"]["statistic"].get<double>());
      os << buf << verdict_cell(r["surrogate_blackbox"], true, color, 10);
      if (r["failure_regime"].get<bool>()) os << "  [low agreement: accuracy gap flagged]";
      os << "\n";
    }
  }
  os << "\n== requirements ==\n";
  for (const auto& r : report.at("requirements")) {
    char buf[256];
    const auto& u = r["utility"];
    const auto& st = r["stealthiness"]["report"];
    std::snprintf(buf, sizeof buf,
                  "ratio %-6s utility gap %.2f pp (%s)  effectiveness %s  integrity %s  stealth psnr %s dB linf %.4f "
                  "(%s)  smallest budget %s/%s\n",
                  num(r["wm_ratio"].get<double>()).c_str(), u["gap_pp"].get<double>(),
                  u["pass"].get<bool>() ? "pass" : "FAIL", r["effectiveness_pass"].get<bool>() ? "pass" : "FAIL",
                  r["integrity_pass"].get<bool>() ? "pass" : "FAIL", cell(st["psnr_db"]).c_str(),
                  st["linf_pixel"].get<double>(), r["stealthiness"]["pass"].get<bool>() ? "pass" : "FAIL",
                  cell(r["smallest_sufficient_budget"]).c_str(), cell(r["pair_count"]).c_str());
    os << buf;
    if (r["no_watermark_effect"].get<bool>()) os << "  no watermark effect on the marked model\n";
  }
  return os.str();
}

}  // namespace radmark
