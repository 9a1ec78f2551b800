// crystal-ot: command-line front end.
//
//   crystal-ot solve      --scenario s.json [--cost crystalline|euclidean|smoothed --n N]
//   crystal-ot select     --scenario s.json [--method restricted|lexicographic|both]
//                         [--smooth-sequence 1,10,100]
//   crystal-ot convexity  --scenario s.json [--grid-refine L] [--emit-plot-data]
//   crystal-ot verify     --scenario a.json --scenario b.json | --scenario dir/ [--seed S]
//   crystal-ot oracle     --scenario s.json
//
// Results go to stdout, or to files under --out. Exit codes: 0 success / all
// checks pass, 1 a check failed or a solve error, 2 configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "crystal_ot/error.hpp"
#include "crystal_ot/interpolation.hpp"
#include "crystal_ot/json_io.hpp"
#include "crystal_ot/oracle.hpp"
#include "crystal_ot/scenario.hpp"
#include "crystal_ot/selection.hpp"
#include "crystal_ot/simd/kernels.hpp"
#include "crystal_ot/suite.hpp"

namespace fs = std::filesystem;
using namespace crystal_ot;

namespace {

struct Common {
  std::vector<std::string> scenarios;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void emit(const Common& c, const std::string& file, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(c.out);
  std::ofstream(fs::path(c.out) / file) << text;
}

Scenario single_scenario(const Common& c) {
  if (c.scenarios.size() != 1) throw ConfigError("this command takes exactly one --scenario");
  Scenario s = load_scenario(c.scenarios.front());
  if (c.seed) s.seed = *c.seed;
  return s;
}

Instance first_instance(const Scenario& s) {
  auto all = scenario_instances(s);
  if (all.empty()) throw ConfigError("scenario " + s.name + " has no instances");
  return std::move(all.front());
}

std::vector<Scenario> expand_scenarios(const Common& c) {
  std::vector<fs::path> files;
  for (const auto& arg : c.scenarios) {
    if (fs::is_directory(arg)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(arg)) {
        if (e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(arg);
    }
  }
  std::vector<Scenario> out;
  for (const auto& f : files) {
    out.push_back(load_scenario(f));
    if (c.seed) out.back().seed = *c.seed;
  }
  return out;
}

int cmd_solve(const Common& c, const std::string& cost_name, int n) {
  const auto s = single_scenario(c);
  const auto inst = first_instance(s);
  CostSpec cost = CostSpec::crystalline_sq(inst.generator);
  if (cost_name == "euclidean") {
    cost = CostSpec::euclidean_sq();
  } else if (cost_name == "smoothed") {
    cost = CostSpec::smoothed_sq(inst.generator, n);
  } else if (cost_name != "crystalline") {
    throw ConfigError("unknown --cost " + cost_name);
  }
  const auto sol = solve_kantorovich(inst.mu, inst.nu, cost);
  Json j = to_json(sol.plan, sol.value);
  j["duals"] = to_json(sol.duals);
  j["pivots"] = sol.stats.pivots;
  emit(c, "solve.json", j.dump(2) + "\n");
  return 0;
}

int cmd_select(const Common& c, const std::string& method, const std::vector<int>& smooth) {
  const auto s = single_scenario(c);
  const auto inst = first_instance(s);
  SelectOptions opts;
  if (method == "restricted") {
    opts.mode = SelectMode::Restricted;
  } else if (method == "lexicographic") {
    opts.mode = SelectMode::Lexicographic;
  } else if (method == "both") {
    opts.mode = SelectMode::Both;
  } else {
    throw ConfigError("unknown --method " + method);
  }
  const auto sel = select_plan(inst.mu, inst.nu, inst.generator, opts);
  emit(c, "selection.json", to_json(sel).dump(2) + "\n");
  if (!smooth.empty()) {
    std::ostringstream csv;
    csv << "n,primary_excess,secondary_excess\n";
    const auto c1 = CostSpec::crystalline_sq(inst.generator);
    for (int n : smooth) {
      if (n < 1) throw ConfigError("--smooth-sequence entries must be >= 1");
      const auto plan = smoothed_plan(inst.mu, inst.nu, inst.generator, n);
      char line[128];
      std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", n, plan_cost(plan, c1) - sel.primary_value,
                    std::abs(plan_cost(plan, CostSpec::euclidean_sq()) - sel.secondary_value));
      csv << line;
    }
    emit(c, "smoothed.csv", csv.str());
  }
  return 0;
}

int cmd_convexity(const Common& c, std::size_t refine, bool plot) {
  const auto s = single_scenario(c);
  if (!s.fine_grid) throw ConfigError("scenario " + s.name + " has no fine_grid");
  const auto inst = first_instance(s);
  const auto sel = select_plan(inst.mu, inst.nu, inst.generator);
  Json levels = Json::array();
  GridSpec grid = *s.fine_grid;
  std::ostringstream csv;
  csv << "grid,t,entropy,chord,defect\n";
  for (std::size_t level = 0; level <= refine; ++level) {
    const auto rep = entropy_convexity_along(sel.plan, sel.primary_value, s.times, grid, s.K);
    levels.push_back(Json{{"grid", to_json(grid)}, {"report", to_json(rep)}});
    char line[160];
    std::snprintf(line, sizeof line, "%zu,0,%.17g,%.17g,0\n", grid.cells[0], rep.ent0, rep.ent0);
    csv << line;
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g\n", grid.cells[0], rep.times[k],
                    rep.entropies[k], rep.chords[k], rep.defects[k]);
      csv << line;
    }
    std::snprintf(line, sizeof line, "%zu,1,%.17g,%.17g,0\n", grid.cells[0], rep.ent1, rep.ent1);
    csv << line;
    grid = grid.refined(2);
  }
  emit(c, "convexity.json", Json{{"scenario", s.name}, {"levels", levels}}.dump(2) + "\n");
  if (plot) emit(c, "convexity.csv", csv.str());
  return 0;
}

int cmd_verify(const Common& c, std::size_t workers) {
  const auto scenarios = expand_scenarios(c);
  const auto verdicts = run_suite(scenarios, workers);
  bool all = true;
  for (const auto& v : verdicts) all = all && v.pass;
  if (!c.out.empty()) {
    write_suite_outputs(c.out, verdicts);
  } else {
    Json arr = Json::array();
    for (const auto& v : verdicts) arr.push_back(to_json(v));
    std::cout << arr.dump(2) << '\n';
  }
  for (const auto& v : verdicts) {
    std::cerr << (v.pass ? "PASS " : "FAIL ") << v.scenario << '\n';
    for (const auto& chk : v.checks) {
      if (!chk.pass) std::cerr << "  failed: " << chk.name << (chk.error.empty() ? "" : " (" + chk.error + ")") << '\n';
    }
  }
  return all ? 0 : 1;
}

int cmd_oracle(const Common& c) {
  const auto s = single_scenario(c);
  const auto inst = first_instance(s);
  const auto res = oracle_vertex_enumeration(inst.mu, inst.nu, CostSpec::crystalline_sq(inst.generator),
                                             CostSpec::euclidean_sq());
  emit(c, "oracle.json", to_json(res).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crystalline-norm optimal transport: plan selection and verification"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", common.scenarios, "Scenario JSON file (verify also takes directories)")
        ->required();
    sub->add_option("--out", common.out, "Output directory (default: stdout)");
    sub->add_option("--seed", common.seed, "Override the scenario seed");
  };

  std::string cost = "crystalline";
  int smooth_n = 1;
  auto* solve = app.add_subcommand("solve", "Kantorovich solve with potentials");
  add_common(solve);
  solve->add_option("--cost", cost, "crystalline, euclidean or smoothed");
  solve->add_option("--n", smooth_n, "Smoothing index for --cost smoothed");

  std::string method = "restricted";
  std::vector<int> smooth;
  auto* select = app.add_subcommand("select", "Secondary-variational plan selection");
  add_common(select);
  select->add_option("--method", method, "restricted, lexicographic or both");
  select->add_option("--smooth-sequence", smooth, "Smoothing indices, e.g. 1,10,100")->delimiter(',');

  std::size_t grid_refine = 0;
  bool plot = false;
  auto* convexity = app.add_subcommand("convexity", "Entropy along the selected interpolation");
  add_common(convexity);
  convexity->add_option("--grid-refine", grid_refine, "Extra fine-grid levels (each doubles)");
  convexity->add_flag("--emit-plot-data", plot, "Write the (t, entropy, chord) CSV");

  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  add_common(verify);
  verify->add_option("--workers", workers, "Scenario worker threads");

  auto* oracle = app.add_subcommand("oracle", "Brute-force vertex enumeration (up to 5 x 5)");
  add_common(oracle);

  auto* simd = app.add_subcommand("simd", "Print the dispatched kernel level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*solve) return cmd_solve(common, cost, smooth_n);
    if (*select) return cmd_select(common, method, smooth);
    if (*convexity) return cmd_convexity(common, grid_refine, plot);
    if (*verify) return cmd_verify(common, workers);
    if (*oracle) return cmd_oracle(common);
    if (*simd) {
      std::cout << simd::level_name(simd::kernels().level) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
