#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "crystal_ot/geometry.hpp"
#include "crystal_ot/measures.hpp"

namespace crystal_ot {

/// Dense source-by-target cost table. Forbidden edges are flagged in a
/// separate mask and hold 0 in `values`; they never take part in arithmetic.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> forbidden;  // empty when every edge is finite

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  bool is_forbidden(std::size_t i, std::size_t j) const {
    return !forbidden.empty() && forbidden[i * cols + j] != 0;
  }
  bool has_forbidden() const noexcept { return !forbidden.empty(); }
  std::size_t allowed_count() const;
  double max_abs_finite() const;
};

/// Pairwise costs between the atoms of mu (rows) and nu (columns), evaluated
/// with the dispatched row kernels. Agrees bit for bit with evaluate_cost.
CostMatrix build_cost_matrix(const CostSpec& cost, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu);

/// a + weight * b on the finite edges; forbidden where either is.
CostMatrix combine_costs(const CostMatrix& a, const CostMatrix& b, double weight);

}  // namespace crystal_ot
