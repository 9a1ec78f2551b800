#pragma once

// Exact discrete Kantorovich solver (transportation simplex) with dual
// potentials, plus cyclical-monotonicity audits of transport plans.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "crystal_ot/cost_matrix.hpp"
#include "crystal_ot/geometry.hpp"
#include "crystal_ot/measures.hpp"

namespace crystal_ot {

struct PlanEntry {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0.0;
};

/// Sparse coupling between two discrete measures. Entries are sorted by
/// (source, target) and carry positive mass.
class TransportPlan {
 public:
  TransportPlan(DiscreteMeasure source, DiscreteMeasure target, std::vector<PlanEntry> entries);

  const DiscreteMeasure& source() const noexcept { return source_; }
  const DiscreteMeasure& target() const noexcept { return target_; }
  std::span<const PlanEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Largest deviation of row/column sums from the marginals.
  double marginal_error() const;
  /// Mass on (i, j), zero when absent.
  double mass(std::size_t source, std::size_t target) const;

 private:
  DiscreteMeasure source_;
  DiscreteMeasure target_;
  std::vector<PlanEntry> entries_;
};

/// Integral of the cost against the plan; +infinity if it charges a
/// forbidden edge.
double plan_cost(const TransportPlan& plan, const CostSpec& cost);
double plan_cost(const TransportPlan& plan, const CostMatrix& cost);

/// Kantorovich potentials: phi per source atom, psi per target atom.
struct DualPotentials {
  std::vector<double> phi;
  std::vector<double> psi;

  double objective(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const;
};

/// Basic variable of the final simplex basis. `degenerate` marks basic arcs
/// at zero mass; they complete the spanning tree but are not plan entries.
struct BasisArc {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0.0;
  bool degenerate = false;
};

struct SolverStats {
  std::int64_t pivots = 0;
  std::int64_t degenerate_pivots = 0;
  bool bland_engaged = false;
  bool feasibility_phase = false;
};

/// Snapshot after each pivot, for debugging.
struct IterateInfo {
  std::int64_t pivot = 0;
  int phase = 2;
  double primal = 0.0;  // sum of cost * flow over basic arcs
  double dual = 0.0;    // sum phi mu + sum psi nu
};

struct SolverOptions {
  /// 0 means the default cap of 50 (|mu| + |nu|)^2 pivots.
  std::int64_t max_pivots = 0;
  /// Optional starting basis (spanning tree of |mu| + |nu| - 1 arcs).
  std::vector<BasisArc> warm_start;
  std::function<void(const IterateInfo&)> on_iterate;
};

struct KantorovichSolution {
  TransportPlan plan;
  double value = 0.0;
  DualPotentials duals;
  std::vector<BasisArc> basis;
  SolverStats stats;
};

/// Minimizes the total cost over couplings of mu and nu. Potentials are
/// normalized so phi of source atom 0 is 0.
///
/// Throws InfeasibleError when a restricted cost admits no finite coupling
/// and SolverError when the pivot cap is reached.
KantorovichSolution solve_kantorovich(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const CostSpec& cost, const SolverOptions& options = {});

/// Same on a prebuilt cost table.
KantorovichSolution solve_kantorovich(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                      const CostMatrix& cost, const SolverOptions& options = {});

double wasserstein_sq(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost);

/// Worst primal/dual certificate defects of a solution against a cost table.
struct DualityCheck {
  double max_infeasibility = 0.0;  // max over finite edges of phi + psi - c
  double max_support_gap = 0.0;    // max over plan entries of c - phi - psi
  double duality_gap = 0.0;        // |value - dual objective|
};
DualityCheck check_duality(const KantorovichSolution& solution, const CostMatrix& cost);

/// Result of a cyclical-monotonicity audit. margin = (cost after the cyclic
/// reassignment) - (cost on the support); negative means violation.
struct MonotonicityReport {
  double worst_margin = 0.0;
  std::vector<std::size_t> witness;  // plan entry indices forming the worst cycle
  std::size_t cycles_checked = 0;
  std::size_t violations = 0;        // cycles with margin < -tolerance
  double tolerance = 1e-7;

  bool clean() const noexcept { return violations == 0; }
};

/// Checks every pair of support entries, then `trials` random cycles of
/// lengths 3..max_cycle drawn from `seed`.
MonotonicityReport audit_cyclical_monotonicity(const TransportPlan& plan, const CostSpec& cost,
                                               std::size_t max_cycle, std::size_t trials,
                                               std::uint64_t seed = 0);

}  // namespace crystal_ot
