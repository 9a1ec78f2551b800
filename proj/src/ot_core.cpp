#include "crystal_ot/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crystal_ot/error.hpp"
#include "crystal_ot/rng.hpp"
#include "network_simplex.hpp"

namespace crystal_ot {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TransportPlan::TransportPlan(DiscreteMeasure source, DiscreteMeasure target,
                             std::vector<PlanEntry> entries)
    : source_(std::move(source)), target_(std::move(target)) {
  if (source_.dim() != target_.dim()) throw InputError("TransportPlan: dimension mismatch");
  for (const auto& e : entries) {
    if (e.source >= source_.size() || e.target >= target_.size()) {
      throw InputError("TransportPlan: entry index out of range");
    }
    if (!(e.mass >= 0.0) || !std::isfinite(e.mass)) {
      throw InputError("TransportPlan: entry mass must be finite and nonnegative");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const PlanEntry& a, const PlanEntry& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  // Combine repeated pairs, drop zero mass.
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().source == e.source &&
        entries_.back().target == e.target) {
      entries_.back().mass += e.mass;
    } else {
      entries_.push_back(e);
    }
  }
  std::erase_if(entries_, [](const PlanEntry& e) { return e.mass <= 0.0; });
}

double TransportPlan::marginal_error() const {
  std::vector<double> rows(source_.size(), 0.0), cols(target_.size(), 0.0);
  for (const auto& e : entries_) {
    rows[e.source] += e.mass;
    cols[e.target] += e.mass;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    worst = std::max(worst, std::abs(rows[i] - source_.weight(i)));
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    worst = std::max(worst, std::abs(cols[j] - target_.weight(j)));
  }
  return worst;
}

double TransportPlan::mass(std::size_t source, std::size_t target) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{source, target},
                             [](const PlanEntry& e, const std::pair<std::size_t, std::size_t>& k) {
                               return e.source != k.first ? e.source < k.first
                                                          : e.target < k.second;
                             });
  if (it != entries_.end() && it->source == source && it->target == target) return it->mass;
  return 0.0;
}

double plan_cost(const TransportPlan& plan, const CostSpec& cost) {
  double total = 0.0;
  for (const auto& e : plan.entries()) {
    const auto c = evaluate_cost(cost, plan.source().atom(e.source), plan.target().atom(e.target));
    if (c.forbidden) return kInf;
    total += e.mass * c.value;
  }
  return total;
}

double plan_cost(const TransportPlan& plan, const CostMatrix& cost) {
  double total = 0.0;
  for (const auto& e : plan.entries()) {
    if (cost.is_forbidden(e.source, e.target)) return kInf;
    total += e.mass * cost.at(e.source, e.target);
  }
  return total;
}

double DualPotentials::objective(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const {
  double total = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) total += phi[i] * mu.weight(i);
  for (std::size_t j = 0; j < psi.size(); ++j) total += psi[j] * nu.weight(j);
  return total;
}

KantorovichSolution solve_kantorovich(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const CostSpec& cost, const SolverOptions& options) {
  return solve_kantorovich(mu, nu, build_cost_matrix(cost, mu, nu), options);
}

KantorovichSolution solve_kantorovich(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const CostMatrix& cost, const SolverOptions& options) {
  if (mu.dim() != nu.dim()) throw InputError("solve_kantorovich: measures differ in dimension");
  detail::SimplexInput input{mu.weights(), nu.weights(), &cost, &options};
  auto out = detail::run_network_simplex(input);

  std::vector<PlanEntry> entries;
  entries.reserve(out.basis.size());
  for (const auto& arc : out.basis) {
    if (!arc.degenerate) entries.push_back({arc.source, arc.target, arc.mass});
  }
  TransportPlan plan(mu, nu, std::move(entries));
  const double value = plan_cost(plan, cost);
  return KantorovichSolution{std::move(plan), value, DualPotentials{std::move(out.u), std::move(out.v)},
                             std::move(out.basis), out.stats};
}

double wasserstein_sq(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost) {
  return solve_kantorovich(mu, nu, cost).value;
}

DualityCheck check_duality(const KantorovichSolution& solution, const CostMatrix& cost) {
  DualityCheck out;
  const auto& phi = solution.duals.phi;
  const auto& psi = solution.duals.psi;
  out.max_infeasibility = -kInf;
  for (std::size_t i = 0; i < cost.rows; ++i) {
    for (std::size_t j = 0; j < cost.cols; ++j) {
      if (cost.is_forbidden(i, j)) continue;
      out.max_infeasibility = std::max(out.max_infeasibility, phi[i] + psi[j] - cost.at(i, j));
    }
  }
  out.max_support_gap = 0.0;
  for (const auto& e : solution.plan.entries()) {
    out.max_support_gap =
        std::max(out.max_support_gap, cost.at(e.source, e.target) - phi[e.source] - psi[e.target]);
  }
  out.duality_gap = std::abs(
      solution.value - solution.duals.objective(solution.plan.source(), solution.plan.target()));
  return out;
}

MonotonicityReport audit_cyclical_monotonicity(const TransportPlan& plan, const CostSpec& cost,
                                               std::size_t max_cycle, std::size_t trials,
                                               std::uint64_t seed) {
  if (max_cycle < 2) throw InputError("audit_cyclical_monotonicity: max_cycle must be >= 2");
  MonotonicityReport report;
  const auto entries = plan.entries();
  const std::size_t k = entries.size();
  auto c = [&](std::size_t a, std::size_t b) {
    return evaluate_cost(cost, plan.source().atom(entries[a].source),
                         plan.target().atom(entries[b].target));
  };
  // margin of sending entry cycle[a]'s source to entry cycle[a+1]'s target.
  auto margin = [&](const std::vector<std::size_t>& cycle) {
    double before = 0.0, after = 0.0;
    for (std::size_t a = 0; a < cycle.size(); ++a) {
      const auto on = c(cycle[a], cycle[a]);
      const auto off = c(cycle[a], cycle[(a + 1) % cycle.size()]);
      if (off.forbidden) return kInf;
      before += on.value;
      after += off.value;
    }
    return after - before;
  };
  auto record = [&](const std::vector<std::size_t>& cycle) {
    const double m = margin(cycle);
    ++report.cycles_checked;
    if (m < -report.tolerance) ++report.violations;
    if (report.witness.empty() || m < report.worst_margin) {
      report.worst_margin = m;
      report.witness = cycle;
    }
  };

  std::vector<std::size_t> cycle(2);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      cycle[0] = a;
      cycle[1] = b;
      record(cycle);
    }
  }
  const std::size_t longest = std::min(max_cycle, k);
  if (longest >= 3) {
    Rng rng = Rng::stream(seed, "cyclical-monotonicity");
    std::vector<std::size_t> pool(k);
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t len = 3 + rng.below(longest - 2);
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t a = 0; a < len; ++a) std::swap(pool[a], pool[a + rng.below(k - a)]);
      record({pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len)});
    }
  }
  if (report.witness.empty()) report.worst_margin = 0.0;
  return report;
}

}  // namespace crystal_ot
