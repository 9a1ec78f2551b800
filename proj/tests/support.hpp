#pragma once

#include <cmath>
#include <vector>

#include "crystal_ot/measures.hpp"
#include "crystal_ot/rng.hpp"

namespace testing_support {

using namespace crystal_ot;

// mu = 1/2 d(0,0) + 1/2 d(0,1), nu = 1/2 d(2,0) + 1/2 d(2,1).
inline DiscreteMeasure two_by_two_mu() { return DiscreteMeasure(2, {0, 0, 0, 1}, {0.5, 0.5}); }
inline DiscreteMeasure two_by_two_nu() { return DiscreteMeasure(2, {2, 0, 2, 1}, {0.5, 0.5}); }

// Random measure with up to max_atoms atoms in [lo, hi]^dim; lattice mode
// snaps coordinates to multiples of 0.5 so that ties appear.
inline DiscreteMeasure random_measure(Rng& rng, std::size_t max_atoms, std::size_t dim = 2,
                                      bool lattice = false, double lo = 0.0, double hi = 4.0) {
  const std::size_t n = 1 + rng.below(max_atoms);
  std::vector<double> atoms(n * dim), weights(n);
  for (double& c : atoms) {
    c = lattice ? lo + 0.5 * static_cast<double>(rng.below(static_cast<std::uint64_t>((hi - lo) / 0.5) + 1))
                : rng.uniform(lo, hi);
  }
  for (double& w : weights) w = static_cast<double>(1 + rng.below(4));
  return DiscreteMeasure::normalized(dim, std::move(atoms), std::move(weights));
}

}  // namespace testing_support
