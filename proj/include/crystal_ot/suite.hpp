#pragma once

// Verification suite: runs every enabled check of a scenario and collects a
// pass/fail verdict with margins and a metrics table.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "crystal_ot/json_io.hpp"
#include "crystal_ot/scenario.hpp"

namespace crystal_ot {

/// One observed quantity compared against its limit: passes iff value <= limit.
struct Observation {
  std::string instance;
  std::string quantity;
  double value = 0.0;
  double limit = 0.0;
};

struct CheckResult {
  std::string name;
  bool pass = true;
  double margin = 0.0;  // min over observations of limit - value
  std::size_t observations = 0;
  std::vector<Observation> failures;  // first few
  std::string error;                  // exception text, if the check threw
  Json detail = Json::object();
};

struct MetricRow {
  std::string check;
  std::string instance;
  std::string metric;
  double value = 0.0;
};

struct Verdict {
  std::string scenario;
  std::uint64_t seed = 0;
  bool pass = true;
  std::vector<CheckResult> checks;
  std::vector<MetricRow> metrics;
};

Verdict run_scenario(const Scenario& scenario);

/// Runs scenarios on `workers` threads; results keep the input order.
std::vector<Verdict> run_suite(const std::vector<Scenario>& scenarios, std::size_t workers = 1);

Json to_json(const Verdict& v);
void write_metrics_csv(std::ostream& os, const Verdict& v);

/// Writes <name>.verdict.json and <name>.metrics.csv per scenario plus
/// summary.json into `dir`.
void write_suite_outputs(const std::filesystem::path& dir, const std::vector<Verdict>& verdicts);

}  // namespace crystal_ot
