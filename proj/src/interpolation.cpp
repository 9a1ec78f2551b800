#include "crystal_ot/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crystal_ot/error.hpp"
#include "crystal_ot/selection.hpp"

namespace crystal_ot {
namespace {

void require_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InputError("time " + std::to_string(t) + " outside [0, 1]");
}

}  // namespace

Point flow_eval(PointView x, PointView y, double t) {
  if (x.size() != y.size()) throw InputError("flow_eval: dimension mismatch");
  require_time(t);
  Point out(x.size());
  if (t == 0.0) {
    std::copy(x.begin(), x.end(), out.begin());
  } else if (t == 1.0) {
    std::copy(y.begin(), y.end(), out.begin());
  } else {
    for (std::size_t d = 0; d < x.size(); ++d) out[d] = (1.0 - t) * x[d] + t * y[d];
  }
  return out;
}

double flow_consistency_defect(PointView x, PointView y, double s, double t, double r) {
  if (!(s < t)) throw InputError("flow_consistency_defect: need s < t");
  require_time(s);
  require_time(t);
  require_time(r);
  const Point direct = flow_eval(x, y, s + r * (t - s));
  const Point a = flow_eval(x, y, s);
  const Point b = flow_eval(x, y, t);
  const Point nested = flow_eval(a, b, r);
  return std::sqrt(squared_euclidean_distance(direct, nested));
}

Interpolant interpolate_plan_indexed(const TransportPlan& plan, double t) {
  require_time(t);
  const std::size_t dim = plan.source().dim();
  const auto entries = plan.entries();
  std::vector<double> points;
  std::vector<double> masses;
  points.reserve(entries.size() * dim);
  for (const auto& e : entries) {
    const Point p = flow_eval(plan.source().atom(e.source), plan.target().atom(e.target), t);
    points.insert(points.end(), p.begin(), p.end());
    masses.push_back(e.mass);
  }
  auto merged =
      merge_coincident(dim, points, masses, kInterpolationMergeTol, MergeMetric::Euclidean);
  double total = 0.0;
  for (double m : merged.masses) total += m;
  for (double& m : merged.masses) m /= total;
  std::vector<std::size_t> to_atom;
  DiscreteMeasure measure(dim, std::move(merged.points), std::move(merged.masses), &to_atom);
  std::vector<std::size_t> entry_atom(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    entry_atom[k] = to_atom[merged.source_to_merged[k]];
  }
  return {std::move(measure), std::move(entry_atom)};
}

DiscreteMeasure interpolate_plan(const TransportPlan& plan, double t) {
  if (t == 0.0) return plan.source();
  if (t == 1.0) return plan.target();
  return interpolate_plan_indexed(plan, t).measure;
}

double ConvexityReport::max_defect() const {
  double worst = defects.empty() ? 0.0 : defects.front();
  for (double d : defects) worst = std::max(worst, d);
  return worst;
}

ConvexityReport entropy_convexity_along(const TransportPlan& plan, double w22,
                                        const std::vector<double>& times,
                                        const GridSpec& fine_grid, double K) {
  fine_grid.validate();
  ConvexityReport rep;
  rep.times = times;
  rep.w22 = w22;
  rep.K = K;
  rep.ent0 = binned_entropy(plan.source(), fine_grid);
  rep.ent1 = binned_entropy(plan.target(), fine_grid);
  for (double t : times) {
    if (!(t > 0.0 && t < 1.0)) throw InputError("convexity times must lie in (0, 1)");
    const double ent = binned_entropy(interpolate_plan(plan, t), fine_grid);
    const double chord = (1.0 - t) * rep.ent0 + t * rep.ent1 - t * (1.0 - t) * (K / 2.0) * w22;
    rep.entropies.push_back(ent);
    rep.chords.push_back(chord);
    rep.defects.push_back(ent - chord);
  }
  return rep;
}

ConvexityReport check_entropy_convexity(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        const VectorSet& generators,
                                        const std::vector<double>& times,
                                        const GridSpec& fine_grid, double K) {
  const auto sel = select_plan(mu, nu, generators);
  return entropy_convexity_along(sel.plan, sel.primary_value, times, fine_grid, K);
}

GeodesicCheck check_geodesic(const TransportPlan& plan, const CostSpec& cost, double w2,
                             double s, double t) {
  GeodesicCheck out;
  out.s = s;
  out.t = t;
  const auto ms = interpolate_plan(plan, s);
  const auto mt = interpolate_plan(plan, t);
  out.w2_st = std::sqrt(std::max(0.0, wasserstein_sq(ms, mt, cost)));
  out.expected = std::abs(t - s) * w2;
  out.error = std::abs(out.w2_st - out.expected);
  return out;
}

}  // namespace crystal_ot
