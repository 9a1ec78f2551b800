#include "crystal_ot/suite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <thread>

#include "crystal_ot/error.hpp"
#include "crystal_ot/interpolation.hpp"
#include "crystal_ot/oracle.hpp"
#include "crystal_ot/rng.hpp"
#include "crystal_ot/selection.hpp"

namespace crystal_ot {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxFailuresKept = 10;
constexpr std::pair<double, double> kTimePairs[] = {{0.0, 0.5}, {0.25, 0.75}, {0.5, 1.0}};

class Recorder {
 public:
  Recorder(CheckResult& result, std::vector<MetricRow>& metrics)
      : result_(result), metrics_(metrics) {}

  void observe(const std::string& instance, const std::string& quantity, double value,
               double limit) {
    ++result_.observations;
    margin_ = std::min(margin_, limit - value);
    if (!(value <= limit)) {
      result_.pass = false;
      if (result_.failures.size() < kMaxFailuresKept) {
        result_.failures.push_back({instance, quantity, value, limit});
      }
    }
  }
  void metric(const std::string& instance, const std::string& name, double value) {
    metrics_.push_back({result_.name, instance, name, value});
  }
  void fail(const std::string& instance, const std::string& what) {
    result_.pass = false;
    if (!result_.error.empty()) result_.error += "; ";
    result_.error += instance + ": " + what;
  }
  Json& detail() { return result_.detail; }
  void finish() { result_.margin = result_.observations == 0 ? 0.0 : margin_; }

 private:
  CheckResult& result_;
  std::vector<MetricRow>& metrics_;
  double margin_ = kInf;
};

struct Context {
  const Instance* inst = nullptr;
  CostSpec c1 = CostSpec::euclidean_sq();
  CostSpec c2 = CostSpec::euclidean_sq();
  CostMatrix m1;
  std::unique_ptr<KantorovichSolution> primary;
  std::unique_ptr<SelectionResult> selected;
  double plan_primary = 0.0;    // d^2 cost of the (possibly injected) plan
  double plan_secondary = 0.0;  // d_eu^2 cost of the same plan
  std::string error;
};

// Moves mass from two support entries onto their crossed pairs.
TransportPlan swap_first_pair(const TransportPlan& plan) {
  const auto entries = plan.entries();
  for (std::size_t a = 0; a < entries.size(); ++a) {
    for (std::size_t b = a + 1; b < entries.size(); ++b) {
      if (entries[a].source == entries[b].source || entries[a].target == entries[b].target) {
        continue;
      }
      std::vector<PlanEntry> out(entries.begin(), entries.end());
      const double q = std::min(entries[a].mass, entries[b].mass);
      out[a].mass -= q;
      out[b].mass -= q;
      out.push_back({entries[a].source, entries[b].target, q});
      out.push_back({entries[b].source, entries[a].target, q});
      return TransportPlan(plan.source(), plan.target(), std::move(out));
    }
  }
  return plan;
}

Context make_context(const Scenario& s, const Instance& inst) {
  Context ctx;
  ctx.inst = &inst;
  ctx.c1 = CostSpec::crystalline_sq(inst.generator);
  try {
    ctx.m1 = build_cost_matrix(ctx.c1, inst.mu, inst.nu);
    ctx.primary = std::make_unique<KantorovichSolution>(solve_kantorovich(inst.mu, inst.nu, ctx.m1));
    ctx.selected = std::make_unique<SelectionResult>(select_plan(inst.mu, inst.nu, inst.generator));
    if (s.inject_plan == "swap") {
      ctx.selected->plan = swap_first_pair(ctx.selected->plan);
      ctx.selected->unique.reset();
    }
    ctx.plan_primary = plan_cost(ctx.selected->plan, ctx.c1);
    ctx.plan_secondary = plan_cost(ctx.selected->plan, ctx.c2);
  } catch (const std::exception& e) {
    ctx.error = e.what();
  }
  return ctx;
}

double max_entry_difference(const TransportPlan& a, const TransportPlan& b) {
  double worst = 0.0;
  for (const auto& e : a.entries()) worst = std::max(worst, std::abs(e.mass - b.mass(e.source, e.target)));
  for (const auto& e : b.entries()) worst = std::max(worst, std::abs(e.mass - a.mass(e.source, e.target)));
  return worst;
}

std::uint64_t instance_seed(const Scenario& s, const std::string& check, const std::string& label) {
  return Rng::stream(s.seed, check + ":" + label)();
}

// --- per-instance checks ---------------------------------------------------

void check_primary_optimality(const Scenario& s, const Context& c, Recorder& r) {
  const auto& label = c.inst->label;
  const auto dc = check_duality(*c.primary, c.m1);
  r.observe(label, "dual_infeasibility", dc.max_infeasibility, s.tol("primary"));
  r.observe(label, "support_gap", dc.max_support_gap, s.tol("primary"));
  r.observe(label, "duality_gap", dc.duality_gap, s.tol("primary"));
  r.observe(label, "primary_marginal_error", c.primary->plan.marginal_error(), s.tol("marginal"));
  r.observe(label, "selected_marginal_error", c.selected->plan.marginal_error(), s.tol("marginal"));
  const double basis = static_cast<double>(c.inst->mu.size() + c.inst->nu.size() - 1);
  r.observe(label, "entries_over_basis", static_cast<double>(c.primary->plan.size()) - basis, 0.0);
  r.observe(label, "dual_normalization", std::abs(c.primary->duals.phi[0]), 0.0);
  r.metric(label, "primary_value", c.primary->value);
  r.metric(label, "pivots", static_cast<double>(c.primary->stats.pivots));
}

void check_oracle(const Scenario& s, const Context& c, Recorder& r) {
  const auto& label = c.inst->label;
  if (c.inst->mu.size() > kOracleMaxAtoms || c.inst->nu.size() > kOracleMaxAtoms) {
    r.metric(label, "skipped", 1.0);
    return;
  }
  const auto o = oracle_vertex_enumeration(c.inst->mu, c.inst->nu, c.c1, c.c2);
  r.observe(label, "primary_vs_oracle", std::abs(c.primary->value - o.pi1_value), s.tol("oracle"));
  r.observe(label, "secondary_vs_oracle", std::abs(c.plan_secondary - o.pi2_value), s.tol("oracle"));
  const bool singleton = o.pi2_plans.size() == 1;
  if (singleton) {
    r.observe(label, "plan_vs_oracle", max_entry_difference(c.selected->plan, o.pi2_plans[0]),
              s.tol("plan_match"));
  }
  if (c.selected->unique) {
    r.observe(label, "uniqueness_certificate", *c.selected->unique == singleton ? 0.0 : 1.0, 0.0);
  }
  r.metric(label, "oracle_vertices", static_cast<double>(o.vertex_count));
  r.metric(label, "oracle_pi2_plans", static_cast<double>(o.pi2_plans.size()));
  r.metric(label, "oracle_gap", o.primary_gap.value_or(-1.0));
}

void check_method_agreement(const Scenario& s, const Context& c, Recorder& r) {
  const auto& label = c.inst->label;
  const auto lex = select_plan_lexicographic(c.inst->mu, c.inst->nu, c.inst->generator);
  r.observe(label, "primary_difference", std::abs(c.selected->primary_value - lex.primary_value),
            s.tol("agreement"));
  r.observe(label, "secondary_difference", std::abs(c.plan_secondary - lex.secondary_value),
            s.tol("agreement"));
  if (c.selected->unique.value_or(false)) {
    r.observe(label, "plan_difference", max_entry_difference(c.selected->plan, lex.plan),
              s.tol("plan_match"));
  }
  r.metric(label, "eps_weight", lex.eps_weight);
}

void check_pi1_membership(const Scenario& s, const Context& c, Recorder& r) {
  r.observe(c.inst->label, "primary_excess", std::abs(c.plan_primary - c.primary->value),
            s.tol("primary"));
}

void check_double_monotonicity_of(const Scenario& s, const Context& c, Recorder& r) {
  const auto& label = c.inst->label;
  const auto rep = check_double_monotonicity(c.selected->plan, c.inst->generator, s.tol("monotonicity"));
  r.observe(label, "monot1_violation", -rep.monot1.worst_margin, s.tol("monotonicity"));
  if (rep.monot2.cycles_checked > 0) {
    r.observe(label, "monot2_violation", -rep.monot2.worst_margin, s.tol("monotonicity"));
  }
  r.metric(label, "monot1_worst_margin", rep.monot1.worst_margin);
  r.metric(label, "monot2_worst_margin", rep.monot2.worst_margin);
  r.metric(label, "tight_pairs", static_cast<double>(rep.tight_pairs));
}

void check_cyclical(const Scenario& s, const Context& c, Recorder& r) {
  const auto& label = c.inst->label;
  const auto seed = instance_seed(s, "cyclical_monotonicity", label);
  const auto a = audit_cyclical_monotonicity(c.primary->plan, c.c1, 4, 200, seed);
  const auto b = audit_cyclical_monotonicity(c.selected->plan, c.c1, 4, 200, seed + 1);
  r.observe(label, "primary_plan_violation", -a.worst_margin, s.tol("monotonicity"));
  r.observe(label, "selected_plan_violation", -b.worst_margin, s.tol("monotonicity"));
  r.metric(label, "worst_margin", std::min(a.worst_margin, b.worst_margin));
}

void check_smoothed(const Scenario& s, const Context& c, Recorder& r) {
  const auto& label = c.inst->label;
  const double p = c.primary->value;
  const double sec = c.plan_secondary;
  double prev_d = kInf, prev_e = kInf;
  double last_d = 0.0, last_e = 0.0;
  for (int n : s.smooth_sequence) {
    const auto plan = smoothed_plan(c.inst->mu, c.inst->nu, c.inst->generator, n);
    const double ed = plan_cost(plan, c.c1) - p;
    const double ee = std::abs(plan_cost(plan, c.c2) - sec);
    r.observe(label, "primary_excess_negative_n" + std::to_string(n), -ed, s.tol("smoothed_noise"));
    if (std::isfinite(prev_d)) {
      r.observe(label, "primary_excess_increase_n" + std::to_string(n), ed - prev_d,
                s.tol("smoothed_noise"));
      r.observe(label, "secondary_excess_increase_n" + std::to_string(n), ee - prev_e,
                s.tol("smoothed_noise"));
    }
    r.metric(label, "primary_excess_n" + std::to_string(n), ed);
    r.metric(label, "secondary_excess_n" + std::to_string(n), ee);
    prev_d = ed;
    prev_e = ee;
    last_d = ed;
    last_e = ee;
  }
  const double limit = s.tol("smoothed") * (1.0 + sec);
  r.observe(label, "final_primary_excess", last_d, limit);
  r.observe(label, "final_secondary_excess", last_e, limit);
}

void check_consistency(const Scenario& s, const Context& c, Recorder& r) {
  const auto& label = c.inst->label;
  const auto& plan = c.selected->plan;
  std::size_t ties = 0;
  for (const auto& [t0, t1] : kTimePairs) {
    const auto rep = check_selection_consistency(plan, c.inst->generator, {}, t0, t1);
    const std::string tag = "_s" + std::to_string(t0).substr(0, 4) + "_t" + std::to_string(t1).substr(0, 4);
    if (rep.rhs_unique.value_or(false)) {
      r.observe(label, "discrepancy" + tag, rep.discrepancy, s.tol("consistency"));
    } else {
      ++ties;
      r.observe(label, "primary_gap" + tag, std::abs(rep.lhs_primary - rep.rhs_primary),
                s.tol("consistency"));
      r.observe(label, "secondary_gap" + tag, std::abs(rep.lhs_secondary - rep.rhs_secondary),
                s.tol("consistency"));
    }
    r.metric(label, "discrepancy" + tag, rep.discrepancy);
  }
  Rng rng = Rng::stream(s.seed, "consistency:" + label);
  std::vector<double> f(plan.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < s.consistency_trials; ++k) {
    for (double& w : f) w = rng.uniform();
    const auto& [t0, t1] = kTimePairs[k % 3];
    const auto rep = check_selection_consistency(plan, c.inst->generator, f, t0, t1);
    const double gap = std::abs(rep.lhs_secondary - rep.rhs_secondary);
    worst = std::max(worst, gap);
    r.observe(label, "reweighted_secondary_gap", gap, s.tol("consistency_objective"));
    if (!rep.rhs_unique.value_or(false)) ++ties;
  }
  r.metric(label, "reweighted_worst_secondary_gap", worst);
  r.metric(label, "ties", static_cast<double>(ties));
}

void check_geodesic_of(const Scenario& s, const Context& c, Recorder& r) {
  const auto& label = c.inst->label;
  const auto& plan = c.selected->plan;
  const double w2 = std::sqrt(std::max(0.0, c.plan_primary));
  for (const auto& [t0, t1] : kTimePairs) {
    const auto g = check_geodesic(plan, c.c1, w2, t0, t1);
    r.observe(label, "w2_error", g.error, s.tol("geodesic") * (1.0 + w2));
    r.metric(label, "w2_error", g.error);
    double speed = 0.0;
    for (const auto& e : plan.entries()) {
      const auto x = plan.source().atom(e.source);
      const auto y = plan.target().atom(e.target);
      const double d = crystalline_distance(x, y, c.inst->generator);
      const double dst = crystalline_distance(flow_eval(x, y, t0), flow_eval(x, y, t1), c.inst->generator);
      speed = std::max(speed, std::abs(dst - (t1 - t0) * d));
    }
    r.observe(label, "constant_speed", speed, s.tol("constant_speed"));
  }
}

// --- scenario-level checks --------------------------------------------------

void check_flow(const Scenario& s, Recorder& r) {
  Rng rng = Rng::stream(s.seed, "flow_consistency");
  double worst = 0.0;
  Point x(s.dim), y(s.dim);
  for (std::size_t k = 0; k < s.flow_samples; ++k) {
    for (auto& v : x) v = rng.uniform(-4.0, 4.0);
    for (auto& v : y) v = rng.uniform(-4.0, 4.0);
    double a = rng.uniform(), b = rng.uniform();
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    worst = std::max(worst, flow_consistency_defect(x, y, a, b, rng.uniform()));
  }
  r.observe(s.name, "max_defect", worst, s.tol("flow"));
  r.metric(s.name, "max_defect", worst);
}

void check_map_trend(const Scenario& s, const Context& finest, Recorder& r) {
  double prev = kInf;
  for (std::size_t k = 0; k < s.refine.size(); ++k) {
    const std::size_t cells = s.refine[k];
    const bool last = k + 1 == s.refine.size();
    std::unique_ptr<SelectionResult> local;
    const TransportPlan* plan = nullptr;
    if (last && finest.selected) {
      plan = &finest.selected->plan;
    } else {
      local = std::make_unique<SelectionResult>(
          select_plan(s.mu->build(cells), s.nu->build(cells), *s.generator));
      plan = &local->plan;
    }
    const double cell = s.mu->is_density()
                            ? s.mu->grid.cell_width(0) * static_cast<double>(s.mu->grid.cells[0]) /
                                  static_cast<double>(cells)
                            : 0.0;
    const auto rep = check_map_induced(*plan, 2.0 * cell);
    const std::string tag = "cells" + std::to_string(cells);
    r.metric(s.name, "splitting_fraction_" + tag, rep.splitting_fraction);
    r.metric(s.name, "worst_diameter_" + tag, rep.worst_diameter);
    if (std::isfinite(prev)) r.observe(s.name, "fraction_increase_" + tag, rep.splitting_fraction - prev, 0.0);
    if (last) r.observe(s.name, "final_fraction", rep.splitting_fraction, s.tol("map_fraction"));
    prev = rep.splitting_fraction;
  }
}

void check_convexity(const Scenario& s, const Context& c, Recorder& r) {
  GridSpec grid = *s.fine_grid;
  double prev_max = kInf;
  Json levels = Json::array();
  for (std::size_t level = 0; level <= s.grid_refine; ++level) {
    const auto rep = entropy_convexity_along(c.selected->plan, c.plan_primary, s.times, grid, s.K);
    const std::string tag = "grid" + std::to_string(grid.cells[0]);
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      const std::string tt = "_t" + std::to_string(rep.times[k]).substr(0, 4);
      r.metric(s.name, "defect_" + tag + tt, rep.defects[k]);
      if (level == 0) r.observe(s.name, "defect_" + tag + tt, rep.defects[k], s.tol("convexity"));
    }
    const double mx = rep.max_defect();
    if (std::isfinite(prev_max)) {
      r.observe(s.name, "max_defect_growth_" + tag, mx,
                prev_max + s.tol("convexity_trend") * std::abs(prev_max) + 1e-12);
    }
    levels.push_back(Json{{"grid", to_json(grid)}, {"report", to_json(rep)}});
    prev_max = mx;
    grid = grid.refined(2);
  }
  r.detail()["levels"] = levels;
}

}  // namespace

Verdict run_scenario(const Scenario& s) {
  Verdict v;
  v.scenario = s.name;
  v.seed = s.seed;

  std::vector<Instance> instances;
  std::string setup_error;
  try {
    instances = scenario_instances(s);
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  std::vector<Context> contexts;
  contexts.reserve(instances.size());
  for (const auto& inst : instances) contexts.push_back(make_context(s, inst));

  using InstanceCheck = void (*)(const Scenario&, const Context&, Recorder&);
  const std::vector<std::pair<std::string, InstanceCheck>> per_instance{
      {"primary_optimality", check_primary_optimality},
      {"oracle_agreement", check_oracle},
      {"method_agreement", check_method_agreement},
      {"pi1_membership", check_pi1_membership},
      {"double_monotonicity", check_double_monotonicity_of},
      {"cyclical_monotonicity", check_cyclical},
      {"smoothed_convergence", check_smoothed},
      {"consistency", check_consistency},
      {"geodesic", check_geodesic_of}};

  for (const auto& name : known_checks()) {
    if (!s.check_enabled(name)) continue;
    CheckResult result;
    result.name = name;
    Recorder rec(result, v.metrics);
    if (!setup_error.empty()) rec.fail(s.name, setup_error);
    auto guarded = [&](const std::string& label, auto&& fn) {
      try {
        fn();
      } catch (const std::exception& e) {
        rec.fail(label, e.what());
      }
    };
    auto it = std::find_if(per_instance.begin(), per_instance.end(),
                           [&](const auto& p) { return p.first == name; });
    if (it != per_instance.end()) {
      for (const auto& ctx : contexts) {
        if (!ctx.error.empty()) {
          rec.fail(ctx.inst->label, ctx.error);
          continue;
        }
        guarded(ctx.inst->label, [&] { it->second(s, ctx, rec); });
      }
    } else if (name == "flow_consistency") {
      guarded(s.name, [&] { check_flow(s, rec); });
    } else if (name == "map_trend") {
      if (s.refine.size() >= 2 && s.mu && s.nu && !contexts.empty()) {
        guarded(s.name, [&] { check_map_trend(s, contexts.back(), rec); });
      } else {
        rec.fail(s.name, "map_trend needs mu, nu and at least two refine levels");
      }
    } else if (name == "entropy_convexity") {
      if (!s.fine_grid) {
        rec.fail(s.name, "entropy_convexity needs fine_grid");
      } else {
        for (const auto& ctx : contexts) {
          if (!ctx.error.empty()) {
            rec.fail(ctx.inst->label, ctx.error);
            continue;
          }
          guarded(ctx.inst->label, [&] { check_convexity(s, ctx, rec); });
        }
      }
    }
    rec.finish();
    v.pass = v.pass && result.pass;
    v.checks.push_back(std::move(result));
  }
  if (!setup_error.empty() && v.checks.empty()) v.pass = false;
  return v;
}

std::vector<Verdict> run_suite(const std::vector<Scenario>& scenarios, std::size_t workers) {
  std::vector<Verdict> out(scenarios.size());
  workers = std::max<std::size_t>(1, std::min(workers, scenarios.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < scenarios.size(); k = next++) out[k] = run_scenario(scenarios[k]);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return out;
}

Json to_json(const Verdict& v) {
  Json checks = Json::array();
  for (const auto& c : v.checks) {
    Json failures = Json::array();
    for (const auto& f : c.failures) {
      failures.push_back(Json{{"instance", f.instance},
                              {"quantity", f.quantity},
                              {"value", f.value},
                              {"limit", f.limit}});
    }
    Json j{{"name", c.name},
           {"pass", c.pass},
           {"margin", c.margin},
           {"observations", c.observations},
           {"failures", failures}};
    if (!c.error.empty()) j["error"] = c.error;
    if (!c.detail.empty()) j["detail"] = c.detail;
    checks.push_back(std::move(j));
  }
  return Json{{"scenario", v.scenario}, {"seed", v.seed}, {"pass", v.pass}, {"checks", checks}};
}

void write_metrics_csv(std::ostream& os, const Verdict& v) {
  os << "check,instance,metric,value\n";
  char buf[64];
  for (const auto& m : v.metrics) {
    std::snprintf(buf, sizeof buf, "%.17g", m.value);
    os << m.check << ',' << m.instance << ',' << m.metric << ',' << buf << '\n';
  }
}

void write_suite_outputs(const std::filesystem::path& dir, const std::vector<Verdict>& verdicts) {
  std::filesystem::create_directories(dir);
  Json summary = Json::array();
  bool all = true;
  for (const auto& v : verdicts) {
    std::ofstream(dir / (v.scenario + ".verdict.json")) << to_json(v).dump(2) << '\n';
    std::ofstream csv(dir / (v.scenario + ".metrics.csv"));
    write_metrics_csv(csv, v);
    summary.push_back(Json{{"scenario", v.scenario}, {"pass", v.pass}});
    all = all && v.pass;
  }
  std::ofstream(dir / "summary.json")
      << Json{{"pass", all}, {"scenarios", summary}}.dump(2) << '\n';
}

}  // namespace crystal_ot
