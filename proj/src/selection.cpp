#include "crystal_ot/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "crystal_ot/interpolation.hpp"
#include "crystal_ot/oracle.hpp"

namespace crystal_ot {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double default_tolerance(double primary_value) { return 1e-7 * (1.0 + std::abs(primary_value)); }

CostMatrix restricted_matrix(const CostMatrix& primary_cost, const CostMatrix& secondary_cost,
                             const DualPotentials& duals, double tol, std::size_t& allowed) {
  CostMatrix out = secondary_cost;
  out.forbidden.assign(out.values.size(), 0);
  allowed = 0;
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) {
      const std::size_t a = i * out.cols + j;
      if (duals.phi[i] + duals.psi[j] < primary_cost.values[a] - tol) {
        out.forbidden[a] = 1;
        out.values[a] = 0.0;
      } else {
        ++allowed;
      }
    }
  }
  if (allowed == out.values.size()) out.forbidden.clear();
  return out;
}

// Strongly connected components (Kosaraju, iterative).
std::vector<std::size_t> components(std::size_t nodes,
                                    const std::vector<std::vector<std::size_t>>& out_edges) {
  std::vector<std::vector<std::size_t>> in_edges(nodes);
  for (std::size_t u = 0; u < nodes; ++u) {
    for (std::size_t v : out_edges[u]) in_edges[v].push_back(u);
  }
  std::vector<std::size_t> order;
  order.reserve(nodes);
  std::vector<std::uint8_t> seen(nodes, 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t root = 0; root < nodes; ++root) {
    if (seen[root]) continue;
    seen[root] = 1;
    stack.push_back({root, 0});
    while (!stack.empty()) {
      auto& [u, k] = stack.back();
      if (k < out_edges[u].size()) {
        const std::size_t v = out_edges[u][k++];
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back({v, 0});
        }
      } else {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> comp(nodes, kUnset);
  std::size_t next = 0;
  std::vector<std::size_t> work;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[*it] != kUnset) continue;
    comp[*it] = next;
    work.push_back(*it);
    while (!work.empty()) {
      const std::size_t u = work.back();
      work.pop_back();
      for (std::size_t v : in_edges[u]) {
        if (comp[v] == kUnset) {
          comp[v] = next;
          work.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

// The secondary minimizers are the couplings supported on edges tight for
// both duals. The current plan is the only one iff no tight edge outside its
// support lies on an alternating cycle: source -> target along tight edges,
// target -> source along support edges.
bool unique_on_tight_set(const KantorovichSolution& sol, const CostMatrix& restricted) {
  const std::size_t n = restricted.rows;
  const std::size_t m = restricted.cols;
  const double tol = 1e-9 * (1.0 + restricted.max_abs_finite());
  std::vector<std::vector<std::size_t>> out(n + m);
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (restricted.is_forbidden(i, j)) continue;
      const double slack = restricted.at(i, j) - sol.duals.phi[i] - sol.duals.psi[j];
      if (slack > tol) continue;
      out[i].push_back(n + j);
      if (sol.plan.mass(i, j) == 0.0) candidates.push_back({i, j});
    }
  }
  for (const auto& e : sol.plan.entries()) out[n + e.target].push_back(e.source);
  const auto comp = components(n + m, out);
  for (const auto& [i, j] : candidates) {
    if (comp[i] == comp[n + j]) return false;
  }
  return true;
}

struct PrimaryStage {
  CostMatrix primary_cost;
  CostMatrix secondary_cost;
  KantorovichSolution solution;
};

PrimaryStage solve_primary(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           const VectorSet& generators) {
  auto c1 = build_cost_matrix(CostSpec::crystalline_sq(generators), mu, nu);
  auto c2 = build_cost_matrix(CostSpec::euclidean_sq(), mu, nu);
  auto sol = solve_kantorovich(mu, nu, c1);
  return {std::move(c1), std::move(c2), std::move(sol)};
}

RestrictedSolve resolve_on_tight_set(const PrimaryStage& stage, double tol) {
  std::size_t allowed = 0;
  auto cost = restricted_matrix(stage.primary_cost, stage.secondary_cost, stage.solution.duals,
                                tol, allowed);
  SolverOptions opts;
  opts.warm_start = stage.solution.basis;
  auto sol = solve_kantorovich(stage.solution.plan.source(), stage.solution.plan.target(), cost,
                               opts);
  const bool unique = unique_on_tight_set(sol, cost);
  return RestrictedSolve{std::move(sol), std::move(cost), allowed, unique};
}

SelectionResult select_restricted(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  const VectorSet& generators, const SelectOptions& options) {
  const auto stage = solve_primary(mu, nu, generators);
  const double tol = options.tolerance.value_or(default_tolerance(stage.solution.value));
  auto res = resolve_on_tight_set(stage, tol);
  return SelectionResult{stage.solution.value,
                         res.solution.value,
                         std::move(res.solution.plan),
                         res.allowed,
                         SelectionMethod::PotentialRestriction,
                         res.unique,
                         0.0};
}

}  // namespace

const char* method_name(SelectionMethod m) {
  return m == SelectionMethod::PotentialRestriction ? "restricted" : "lexicographic";
}

RestrictedSolve restrict_and_resolve(const KantorovichSolution& primary,
                                     const CostMatrix& primary_cost, double tol) {
  const PrimaryStage stage{primary_cost,
                           build_cost_matrix(CostSpec::euclidean_sq(), primary.plan.source(),
                                             primary.plan.target()),
                           primary};
  return resolve_on_tight_set(stage, tol);
}

TransportPlan restrict_and_resolve(const TransportPlan& primary, const DualPotentials& duals,
                                   const VectorSet& generators, double tol) {
  const auto& mu = primary.source();
  const auto& nu = primary.target();
  if (duals.phi.size() != mu.size() || duals.psi.size() != nu.size()) {
    throw InputError("restrict_and_resolve: potentials do not match the plan's marginals");
  }
  const auto c1 = build_cost_matrix(CostSpec::crystalline_sq(generators), mu, nu);
  const auto c2 = build_cost_matrix(CostSpec::euclidean_sq(), mu, nu);
  std::size_t allowed = 0;
  const auto cost = restricted_matrix(c1, c2, duals, tol, allowed);
  try {
    return solve_kantorovich(mu, nu, cost).plan;
  } catch (const InfeasibleError& e) {
    throw ConsistencyError(std::string("restrict_and_resolve: tight set admits no coupling: ") +
                           e.what());
  }
}

SafetyBound lexicographic_safety_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const VectorSet& generators) {
  if (mu.size() <= kOracleMaxAtoms && nu.size() <= kOracleMaxAtoms) {
    const auto oracle = oracle_vertex_enumeration(mu, nu, CostSpec::crystalline_sq(generators),
                                                  CostSpec::euclidean_sq());
    if (!oracle.primary_gap || oracle.max_secondary_cost == 0.0) return {kInf, true};
    return {*oracle.primary_gap / oracle.max_secondary_cost, true};
  }
  const double p = wasserstein_sq(mu, nu, CostSpec::crystalline_sq(generators));
  return {1e-6 * (1.0 + p), false};
}

SelectionResult select_plan_lexicographic(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                          const VectorSet& generators,
                                          std::optional<double> eps_weight) {
  const auto bound = lexicographic_safety_bound(mu, nu, generators);
  double eps = eps_weight.value_or(std::min(0.5 * bound.bound, 1.0));
  if (!(eps > 0.0) || !(eps < bound.bound)) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "select_plan_lexicographic: eps_weight %.17g must lie in (0, %.17g), the safety bound",
                  eps, bound.bound);
    throw InputError(msg);
  }
  const auto stage = solve_primary(mu, nu, generators);
  const double p = stage.solution.value;
  for (int attempt = 0; attempt < 40; ++attempt, eps *= 0.5) {
    const auto combined = combine_costs(stage.primary_cost, stage.secondary_cost, eps);
    SolverOptions opts;
    opts.warm_start = stage.solution.basis;
    auto sol = solve_kantorovich(mu, nu, combined, opts);
    const double primary = plan_cost(sol.plan, stage.primary_cost);
    if (std::abs(primary - p) > 1e-9 * (1.0 + std::abs(p))) continue;
    const double secondary = plan_cost(sol.plan, stage.secondary_cost);
    return SelectionResult{p,
                           secondary,
                           std::move(sol.plan),
                           mu.size() * nu.size(),
                           SelectionMethod::LexicographicConstraint,
                           std::nullopt,
                           eps};
  }
  throw ConsistencyError("select_plan_lexicographic: no weight reached the primary optimum");
}

SelectionResult select_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const VectorSet& generators, const SelectOptions& options) {
  if (mu.dim() != generators.dim() || nu.dim() != generators.dim()) {
    throw InputError("select_plan: measures and generators differ in dimension");
  }
  switch (options.mode) {
    case SelectMode::Restricted:
      return select_restricted(mu, nu, generators, options);
    case SelectMode::Lexicographic:
      return select_plan_lexicographic(mu, nu, generators, options.eps_weight);
    case SelectMode::Both:
      break;
  }
  auto restricted = select_restricted(mu, nu, generators, options);
  auto lexicographic = select_plan_lexicographic(mu, nu, generators, options.eps_weight);
  const double d1 = std::abs(restricted.primary_value - lexicographic.primary_value);
  const double d2 = std::abs(restricted.secondary_value - lexicographic.secondary_value);
  if (d1 > options.agreement_tol || d2 > options.agreement_tol) {
    throw SelectionDisagreement("select_plan: methods disagree (primary " + std::to_string(d1) +
                                    ", secondary " + std::to_string(d2) + ")",
                                std::move(restricted), std::move(lexicographic));
  }
  return restricted;
}

TransportPlan smoothed_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const VectorSet& generators, int n) {
  return solve_kantorovich(mu, nu, CostSpec::smoothed_sq(generators, n)).plan;
}

DoubleMonotonicityReport check_double_monotonicity(const TransportPlan& plan,
                                                   const VectorSet& generators, double tol) {
  DoubleMonotonicityReport rep;
  rep.monot1.tolerance = tol;
  rep.monot2.tolerance = tol;
  const auto entries = plan.entries();
  const auto c1 = CostSpec::crystalline_sq(generators);
  auto x = [&](std::size_t k) { return plan.source().atom(entries[k].source); };
  auto y = [&](std::size_t k) { return plan.target().atom(entries[k].target); };
  auto record = [](MonotonicityReport& r, double margin, std::size_t a, std::size_t b) {
    ++r.cycles_checked;
    if (margin < -r.tolerance) ++r.violations;
    if (r.witness.empty() || margin < r.worst_margin) {
      r.worst_margin = margin;
      r.witness = {a, b};
    }
  };
  for (std::size_t a = 0; a < entries.size(); ++a) {
    for (std::size_t b = a + 1; b < entries.size(); ++b) {
      const double m1 = evaluate_cost(c1, x(a), y(b)).value + evaluate_cost(c1, x(b), y(a)).value -
                        evaluate_cost(c1, x(a), y(a)).value - evaluate_cost(c1, x(b), y(b)).value;
      record(rep.monot1, m1, a, b);
      if (std::abs(m1) > tol) continue;
      ++rep.tight_pairs;
      const double m2 = squared_euclidean_distance(x(a), y(b)) +
                        squared_euclidean_distance(x(b), y(a)) -
                        squared_euclidean_distance(x(a), y(a)) -
                        squared_euclidean_distance(x(b), y(b));
      record(rep.monot2, m2, a, b);
    }
  }
  return rep;
}

MapReport check_map_induced(const TransportPlan& plan, double tol_diameter) {
  MapReport rep;
  const auto entries = plan.entries();
  std::size_t begin = 0;
  while (begin < entries.size()) {
    std::size_t end = begin;
    while (end < entries.size() && entries[end].source == entries[begin].source) ++end;
    double diam_sq = 0.0;
    for (std::size_t a = begin; a < end; ++a) {
      for (std::size_t b = a + 1; b < end; ++b) {
        diam_sq = std::max(diam_sq, squared_euclidean_distance(plan.target().atom(entries[a].target),
                                                               plan.target().atom(entries[b].target)));
      }
    }
    const double diam = std::sqrt(diam_sq);
    rep.worst_diameter = std::max(rep.worst_diameter, diam);
    if (diam > tol_diameter) {
      ++rep.split_sources;
      rep.splitting_fraction += plan.source().weight(entries[begin].source);
    }
    begin = end;
  }
  return rep;
}

ConsistencyReport check_selection_consistency(const TransportPlan& selected,
                                              const VectorSet& generators,
                                              std::span<const double> weights, double s,
                                              double t) {
  if (!(s < t)) throw InputError("check_selection_consistency: need s < t");
  if (!(s >= 0.0 && t <= 1.0)) throw InputError("check_selection_consistency: times outside [0, 1]");
  const auto entries = selected.entries();
  if (!weights.empty() && weights.size() != entries.size()) {
    throw InputError("check_selection_consistency: one weight per plan entry is required");
  }
  std::vector<PlanEntry> weighted(entries.begin(), entries.end());
  double total = 0.0;
  for (std::size_t k = 0; k < weighted.size(); ++k) {
    const double f = weights.empty() ? 1.0 : weights[k];
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw InputError("check_selection_consistency: weights must be finite and nonnegative");
    }
    weighted[k].mass *= f;
    total += weighted[k].mass;
  }
  if (!(total > 0.0)) throw InputError("check_selection_consistency: weights vanish on the plan");
  for (auto& e : weighted) e.mass /= total;
  // The reweighted plan between its own marginals.
  const TransportPlan f_plan(selected.source(), selected.target(), weighted);

  const auto at_s = interpolate_plan_indexed(f_plan, s);
  const auto at_t = interpolate_plan_indexed(f_plan, t);
  std::vector<PlanEntry> lhs_entries;
  const auto fe = f_plan.entries();
  for (std::size_t k = 0; k < fe.size(); ++k) {
    lhs_entries.push_back({at_s.entry_atom[k], at_t.entry_atom[k], fe[k].mass});
  }
  const TransportPlan lhs(at_s.measure, at_t.measure, std::move(lhs_entries));
  const auto rhs = select_plan(at_s.measure, at_t.measure, generators);

  ConsistencyReport rep;
  rep.lhs_primary = plan_cost(lhs, CostSpec::crystalline_sq(generators));
  rep.lhs_secondary = plan_cost(lhs, CostSpec::euclidean_sq());
  rep.rhs_primary = plan_cost(rhs.plan, CostSpec::crystalline_sq(generators));
  rep.rhs_secondary = rhs.secondary_value;
  rep.rhs_unique = rhs.unique;
  rep.lhs_entries = lhs.size();
  rep.rhs_entries = rhs.plan.size();

  const auto a = lhs.entries();
  const auto b = rhs.plan.entries();
  std::size_t p = 0, q = 0;
  while (p < a.size() || q < b.size()) {
    const bool take_a = q == b.size() || (p < a.size() && (a[p].source < b[q].source ||
                                                           (a[p].source == b[q].source &&
                                                            a[p].target < b[q].target)));
    const bool take_b = p == a.size() || (q < b.size() && (b[q].source < a[p].source ||
                                                           (b[q].source == a[p].source &&
                                                            b[q].target < a[p].target)));
    if (take_a) {
      rep.discrepancy += a[p++].mass;
    } else if (take_b) {
      rep.discrepancy += b[q++].mass;
    } else {
      rep.discrepancy += std::abs(a[p++].mass - b[q++].mass);
    }
  }
  return rep;
}

ConsistencyReport check_selection_consistency(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                              const VectorSet& generators,
                                              std::span<const double> weights, double s,
                                              double t) {
  const auto selected = select_plan(mu, nu, generators);
  return check_selection_consistency(selected.plan, generators, weights, s, t);
}

}  // namespace crystal_ot
