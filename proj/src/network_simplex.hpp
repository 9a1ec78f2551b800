#pragma once

// Transportation simplex on the complete bipartite graph rows x cols.
//
// The basis is a spanning tree of rows + cols - 1 arcs; potentials come from
// the tree with the potential of row 0 pinned to 0. Forbidden arcs never
// enter the basis in the optimality phase. A cold start that places mass on a
// forbidden arc first minimizes forbidden mass (feasibility phase), then
// exchanges zero-mass forbidden basics for allowed arcs where the graph allows.

#include <cstdint>
#include <span>
#include <vector>

#include "crystal_ot/cost_matrix.hpp"
#include "crystal_ot/ot_core.hpp"

namespace crystal_ot::detail {

struct SimplexInput {
  std::span<const double> supply;
  std::span<const double> demand;
  const CostMatrix* cost = nullptr;
  const SolverOptions* options = nullptr;
};

struct SimplexOutput {
  std::vector<BasisArc> basis;
  std::vector<double> u;  // per row
  std::vector<double> v;  // per column
  SolverStats stats;
};

SimplexOutput run_network_simplex(const SimplexInput& input);

}  // namespace crystal_ot::detail
