#pragma once

// Euclidean geodesic flow G(x, y)(t) = (1 - t) x + t y, displacement
// interpolation of plans, and entropy convexity along the interpolation.

#include <cstddef>
#include <vector>

#include "crystal_ot/geometry.hpp"
#include "crystal_ot/measures.hpp"
#include "crystal_ot/ot_core.hpp"

namespace crystal_ot {

/// (1 - t) x + t y; returns x at t = 0 and y at t = 1 exactly.
Point flow_eval(PointView x, PointView y, double t);

/// |G(x, y)(s + r (t - s)) - G(G(x, y)(s), G(x, y)(t))(r)|.
double flow_consistency_defect(PointView x, PointView y, double s, double t, double r);

/// Merge radius (Euclidean) for coincident interpolated atoms.
inline constexpr double kInterpolationMergeTol = 1e-12;

struct Interpolant {
  DiscreteMeasure measure;
  std::vector<std::size_t> entry_atom;  // plan entry -> atom of `measure`
};

/// (G_t)# plan, with the atom each plan entry lands on.
Interpolant interpolate_plan_indexed(const TransportPlan& plan, double t);
DiscreteMeasure interpolate_plan(const TransportPlan& plan, double t);

struct ConvexityReport {
  std::vector<double> times;
  std::vector<double> entropies;
  double ent0 = 0.0;
  double ent1 = 0.0;
  std::vector<double> chords;   // (1 - t) Ent0 + t Ent1 - t (1 - t) K/2 W2^2
  std::vector<double> defects;  // entropy - chord
  double w22 = 0.0;
  double K = 0.0;

  double max_defect() const;
};

/// Selects the plan between mu and nu, interpolates at each time and bins every
/// measure on the shared grid.
ConvexityReport check_entropy_convexity(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        const VectorSet& generators,
                                        const std::vector<double>& times,
                                        const GridSpec& fine_grid, double K = 0.0);

/// Same along an already selected plan.
ConvexityReport entropy_convexity_along(const TransportPlan& plan, double w22,
                                        const std::vector<double>& times,
                                        const GridSpec& fine_grid, double K = 0.0);

struct GeodesicCheck {
  double s = 0.0;
  double t = 0.0;
  double w2_st = 0.0;     // W2(mu_s, mu_t) by a fresh solve
  double expected = 0.0;  // |t - s| W2(mu_0, mu_1)
  double error = 0.0;
};

/// Compares W2 between interpolants of `plan` with the linear prediction.
GeodesicCheck check_geodesic(const TransportPlan& plan, const CostSpec& cost, double w2,
                             double s, double t);

}  // namespace crystal_ot
