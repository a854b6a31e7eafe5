#pragma once

#include <nlohmann/json.hpp>
#include <string>

namespace radmark {

// Everything in the report directory, derived only from the checkpointed
// results under an experiment output directory.
struct ReportBundle {
  nlohmann::json report;
  std::string table1_csv;  // per dataset/ratio: accuracy, white-box (test probe), black-box, white-box (marked probe)
  std::string table2_csv;  // reference models, same columns
  std::string table3_csv;  // extraction: victim vs surrogate
  std::string sweep_csv;   // budget curve per ratio
};

ReportBundle build_report(const std::string& output_dir);
void write_report_bundle(const ReportBundle& bundle, const std::string& report_dir);

// Human-readable tables. With `color`, outcomes matching expectation (True
// for marked models, False for clean and reference models) are green,
// mismatches red.
std::string render_tables(const nlohmann::json& report, bool color);

}  // namespace radmark
