#pragma once

// Brute-force reference for small transport problems: every basic feasible
// solution of the transport polytope, from all spanning trees of the complete
// bipartite graph. Shares no code with the simplex solver.

#include <cstddef>
#include <optional>
#include <vector>

#include "crystal_ot/geometry.hpp"
#include "crystal_ot/measures.hpp"
#include "crystal_ot/ot_core.hpp"

namespace crystal_ot {

struct OracleVertex {
  std::vector<double> mass;  // dense, row-major |mu| x |nu|
  double primary = 0.0;
  double secondary = 0.0;
};

struct OracleResult {
  double pi1_value = 0.0;
  double pi2_value = 0.0;
  std::vector<TransportPlan> pi2_plans;
  /// Smallest positive distance from pi1_value to another vertex value;
  /// empty when every vertex is primary-optimal.
  std::optional<double> primary_gap;
  /// Largest secondary cost over all atom pairs.
  double max_secondary_cost = 0.0;
  std::size_t trees_enumerated = 0;
  std::size_t vertex_count = 0;
};

/// Largest support the oracle accepts on either side.
inline constexpr std::size_t kOracleMaxAtoms = 5;

/// Lexicographic (primary, then secondary) optimum over all vertices. Plans
/// attaining it within 1e-9 are returned. Throws SizeError past 5 atoms.
OracleResult oracle_vertex_enumeration(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const CostSpec& primary, const CostSpec& secondary);

/// All distinct vertices, for tests.
std::vector<OracleVertex> enumerate_vertices(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                             const CostSpec& primary, const CostSpec& secondary,
                                             std::size_t* trees = nullptr);

}  // namespace crystal_ot
