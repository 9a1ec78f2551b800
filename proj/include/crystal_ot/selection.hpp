#pragma once

// Secondary-variational plan selection: among plans optimal for the
// crystalline cost d^2, pick one minimizing the Euclidean cost d_eu^2.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "crystal_ot/cost_matrix.hpp"
#include "crystal_ot/error.hpp"
#include "crystal_ot/geometry.hpp"
#include "crystal_ot/measures.hpp"
#include "crystal_ot/ot_core.hpp"

namespace crystal_ot {

enum class SelectionMethod { PotentialRestriction, LexicographicConstraint };
const char* method_name(SelectionMethod m);

struct SelectionResult {
  double primary_value = 0.0;    // d^2 optimum
  double secondary_value = 0.0;  // d_eu^2 cost of the selected plan
  TransportPlan plan;
  std::size_t restricted_edge_count = 0;
  SelectionMethod method = SelectionMethod::PotentialRestriction;
  /// Whether the set of secondary minimizers is a single plan; set by the
  /// restriction method.
  std::optional<bool> unique;
  /// Weight used by the lexicographic method.
  double eps_weight = 0.0;
};

enum class SelectMode { Restricted, Lexicographic, Both };

struct SelectOptions {
  SelectMode mode = SelectMode::Restricted;
  /// Tightness tolerance of the restriction; default 1e-7 (1 + |primary|).
  std::optional<double> tolerance;
  /// Lexicographic weight; default half the safety bound.
  std::optional<double> eps_weight;
  /// Allowed disagreement between methods in Both mode.
  double agreement_tol = 1e-6;
};

/// The two methods disagreed; carries both selections.
class SelectionDisagreement : public ConsistencyError {
 public:
  SelectionDisagreement(const std::string& what, SelectionResult restricted,
                        SelectionResult lexicographic)
      : ConsistencyError(what),
        restricted_(std::move(restricted)),
        lexicographic_(std::move(lexicographic)) {}
  const SelectionResult& restricted() const noexcept { return restricted_; }
  const SelectionResult& lexicographic() const noexcept { return lexicographic_; }

 private:
  SelectionResult restricted_;
  SelectionResult lexicographic_;
};

/// Selected plan. In Both mode the restriction result is returned after the
/// lexicographic result agrees with it on both objective values.
SelectionResult select_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const VectorSet& generators, const SelectOptions& options = {});

/// Outcome of the restricted secondary solve.
struct RestrictedSolve {
  KantorovichSolution solution;
  CostMatrix cost;          // d_eu^2 on tight edges, forbidden elsewhere
  std::size_t allowed = 0;  // number of tight edges
  bool unique = false;      // secondary minimizer is a single plan
};

/// Re-solves under d_eu^2 restricted to edges with phi_i + psi_j >= d^2 - tol,
/// warm-started from the primary basis.
RestrictedSolve restrict_and_resolve(const KantorovichSolution& primary,
                                     const CostMatrix& primary_cost, double tol);

/// Same from a bare plan and potentials (cold start).
TransportPlan restrict_and_resolve(const TransportPlan& primary, const DualPotentials& duals,
                                   const VectorSet& generators, double tol);

/// Upper bound on the lexicographic weight below which the one-shot solve is
/// guaranteed to land in the secondary optimal set.
struct SafetyBound {
  double bound = 0.0;
  bool from_oracle = false;
};
SafetyBound lexicographic_safety_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const VectorSet& generators);

/// Minimizes d^2 + eps_weight d_eu^2 in one solve. Throws InputError when
/// eps_weight is not below the safety bound. If the plan's d^2 cost misses the
/// primary optimum, the weight is halved and the solve repeated.
SelectionResult select_plan_lexicographic(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                          const VectorSet& generators,
                                          std::optional<double> eps_weight = std::nullopt);

/// Optimal plan for d^2 + (1/n) d_eu^2.
TransportPlan smoothed_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const VectorSet& generators, int n);

struct DoubleMonotonicityReport {
  MonotonicityReport monot1;      // d^2 exchange margins over support pairs
  MonotonicityReport monot2;      // d_eu^2 margins on pairs where monot1 is tight
  std::size_t tight_pairs = 0;

  bool clean() const noexcept { return monot1.clean() && monot2.clean(); }
};

/// For every pair of support entries (x, y), (x', y'): the d^2 exchange margin
/// d^2(x, y') + d^2(x', y) - d^2(x, y) - d^2(x', y'), and where it is within
/// tol of zero the same margin for d_eu^2.
DoubleMonotonicityReport check_double_monotonicity(const TransportPlan& plan,
                                                   const VectorSet& generators, double tol);

struct MapReport {
  double splitting_fraction = 0.0;  // source mass whose targets spread wider than tol
  double worst_diameter = 0.0;
  std::size_t split_sources = 0;
};

/// Euclidean diameter of each source atom's target set.
MapReport check_map_induced(const TransportPlan& plan, double tol_diameter);

struct ConsistencyReport {
  double discrepancy = 0.0;      // sum |lhs - rhs| over support pairs
  double lhs_primary = 0.0;
  double rhs_primary = 0.0;
  double lhs_secondary = 0.0;
  double rhs_secondary = 0.0;
  std::optional<bool> rhs_unique;
  std::size_t lhs_entries = 0;
  std::size_t rhs_entries = 0;
};

/// Pushes the reweighted selected plan through (G_s, G_t) and compares it with
/// a fresh selection between the two pushforward marginals. `weights` holds f
/// per entry of the selected plan; empty means f = 1.
ConsistencyReport check_selection_consistency(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                              const VectorSet& generators,
                                              std::span<const double> weights, double s,
                                              double t);

/// Same, starting from an already selected plan.
ConsistencyReport check_selection_consistency(const TransportPlan& selected,
                                              const VectorSet& generators,
                                              std::span<const double> weights, double s,
                                              double t);

}  // namespace crystal_ot
