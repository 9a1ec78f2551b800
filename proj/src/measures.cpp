#include "crystal_ot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "crystal_ot/error.hpp"

namespace crystal_ot {
namespace {

constexpr double kMergeTol = 1e-12;
constexpr double kMassTol = 1e-10;

std::string describe_point(PointView p) {
  std::string s = "(";
  for (std::size_t d = 0; d < p.size(); ++d) {
    if (d) s += ", ";
    s += std::to_string(p[d]);
  }
  return s + ")";
}

}  // namespace

MergedAtoms merge_coincident(std::size_t dim, std::span<const double> points,
                             std::span<const double> masses, double tol, MergeMetric metric) {
  const std::size_t n = masses.size();
  if (points.size() != n * dim) throw InputError("merge_coincident: size mismatch");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a * dim] < points[b * dim];
  });

  auto close = [&](std::size_t a, std::size_t b) {
    if (metric == MergeMetric::MaxAbs) {
      for (std::size_t d = 0; d < dim; ++d) {
        if (std::abs(points[a * dim + d] - points[b * dim + d]) > tol) return false;
      }
      return true;
    }
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = points[a * dim + d] - points[b * dim + d];
      s += diff * diff;
    }
    return std::sqrt(s) <= tol;
  };

  // Union-find over close pairs; a group's representative is its smallest
  // input index.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t ia = order[a];
    for (std::size_t b = a + 1; b < n && points[order[b] * dim] - points[ia * dim] <= tol; ++b) {
      const std::size_t ib = order[b];
      if (!close(ia, ib)) continue;
      const std::size_t ra = find(ia);
      const std::size_t rb = find(ib);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  constexpr auto kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> rep(n);
  for (std::size_t i = 0; i < n; ++i) rep[i] = find(i);

  MergedAtoms out;
  out.source_to_merged.assign(n, kUnset);
  std::vector<std::size_t> rep_to_merged(n, kUnset);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = rep[i];
    if (rep_to_merged[r] == kUnset) {
      rep_to_merged[r] = out.masses.size();
      out.points.insert(out.points.end(), points.begin() + static_cast<std::ptrdiff_t>(r * dim),
                        points.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim));
      out.masses.push_back(0.0);
    }
    out.source_to_merged[i] = rep_to_merged[r];
    out.masses[rep_to_merged[r]] += masses[i];
  }
  return out;
}

DiscreteMeasure::DiscreteMeasure(std::size_t dim, std::vector<double> atoms,
                                 std::vector<double> weights,
                                 std::vector<std::size_t>* merged_index) {
  if (dim == 0) throw InputError("DiscreteMeasure: dimension must be at least 1");
  if (weights.empty()) throw InputError("DiscreteMeasure: no atoms");
  if (atoms.size() != weights.size() * dim) {
    throw InputError("DiscreteMeasure: atom array does not match weights and dimension");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw InputError("DiscreteMeasure: weight " + std::to_string(i) + " is not positive");
    }
    total += weights[i];
  }
  for (double c : atoms) {
    if (!std::isfinite(c)) throw InputError("DiscreteMeasure: non-finite atom coordinate");
  }
  if (std::abs(total - 1.0) > kMassTol) {
    throw InputError("DiscreteMeasure: weights sum to " + std::to_string(total) + ", not 1");
  }
  auto merged = merge_coincident(dim, atoms, weights, kMergeTol, MergeMetric::MaxAbs);
  dim_ = dim;
  atoms_ = std::move(merged.points);
  weights_ = std::move(merged.masses);
  if (merged_index) *merged_index = std::move(merged.source_to_merged);
}

DiscreteMeasure DiscreteMeasure::normalized(std::size_t dim, std::vector<double> atoms,
                                            std::vector<double> masses) {
  double total = 0.0;
  for (double m : masses) total += m;
  if (!(total > 0.0)) throw InputError("DiscreteMeasure: total mass must be positive");
  for (double& m : masses) m /= total;
  return DiscreteMeasure(dim, std::move(atoms), std::move(masses));
}

DiscreteMeasure DiscreteMeasure::dirac(const Point& p) {
  return DiscreteMeasure(p.size(), p, {1.0});
}

DiscreteMeasure DiscreteMeasure::translated(PointView shift) const {
  if (shift.size() != dim_) throw InputError("translated: dimension mismatch");
  DiscreteMeasure out = *this;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t d = 0; d < dim_; ++d) out.atoms_[i * dim_ + d] += shift[d];
  }
  return out;
}

void GridSpec::validate() const {
  if (lo.empty() || lo.size() != hi.size() || lo.size() != cells.size()) {
    throw InputError("GridSpec: lo, hi and cells must have the same nonzero length");
  }
  for (std::size_t d = 0; d < lo.size(); ++d) {
    if (!(hi[d] > lo[d])) throw InputError("GridSpec: hi must exceed lo on every axis");
    if (cells[d] == 0) throw InputError("GridSpec: cell counts must be positive");
  }
}

std::size_t GridSpec::total_cells() const {
  std::size_t n = 1;
  for (std::size_t c : cells) n *= c;
  return n;
}

double GridSpec::cell_width(std::size_t axis) const {
  return (hi[axis] - lo[axis]) / static_cast<double>(cells[axis]);
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (std::size_t d = 0; d < dim(); ++d) v *= cell_width(d);
  return v;
}

std::vector<std::size_t> GridSpec::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(dim());
  for (std::size_t d = 0; d < dim(); ++d) {
    idx[d] = flat % cells[d];
    flat /= cells[d];
  }
  return idx;
}

Point GridSpec::cell_center(std::size_t flat) const {
  const auto idx = unflatten(flat);
  Point c(dim());
  for (std::size_t d = 0; d < dim(); ++d) {
    c[d] = lo[d] + (static_cast<double>(idx[d]) + 0.5) * cell_width(d);
  }
  return c;
}

std::optional<std::size_t> GridSpec::locate(PointView p) const {
  if (p.size() != dim()) throw InputError("GridSpec::locate: dimension mismatch");
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (std::size_t d = 0; d < dim(); ++d) {
    const double slack = 1e-12 * (1.0 + std::abs(hi[d] - lo[d]));
    if (p[d] < lo[d] - slack || p[d] > hi[d] + slack) return std::nullopt;
    const double u = (p[d] - lo[d]) * static_cast<double>(cells[d]) / (hi[d] - lo[d]);
    // ceil(u) - 1 puts points on a shared face into the lower cell.
    double k = std::ceil(u) - 1.0;
    k = std::clamp(k, 0.0, static_cast<double>(cells[d] - 1));
    flat += static_cast<std::size_t>(k) * stride;
    stride *= cells[d];
  }
  return flat;
}

GridSpec GridSpec::refined(std::size_t factor) const {
  GridSpec g = *this;
  for (auto& c : g.cells) c *= factor;
  return g;
}

GridSpec GridSpec::translated(PointView shift) const {
  GridSpec g = *this;
  for (std::size_t d = 0; d < dim(); ++d) {
    g.lo[d] += shift[d];
    g.hi[d] += shift[d];
  }
  return g;
}

DiscreteMeasure discretize_density(const Density& density, const GridSpec& grid) {
  grid.validate();
  const std::size_t dim = grid.dim();
  const double vol = grid.cell_volume();
  std::vector<double> atoms;
  std::vector<double> masses;
  for (std::size_t flat = 0; flat < grid.total_cells(); ++flat) {
    const Point c = grid.cell_center(flat);
    const double rho = density(c);
    if (!std::isfinite(rho) || rho < 0.0) {
      throw InputError("discretize_density: density is negative or non-finite at " +
                       describe_point(c));
    }
    if (rho == 0.0) continue;
    atoms.insert(atoms.end(), c.begin(), c.end());
    masses.push_back(rho * vol);
  }
  if (masses.empty()) throw InputError("discretize_density: sampled density is identically zero");
  return DiscreteMeasure::normalized(dim, std::move(atoms), std::move(masses));
}

std::vector<BinnedCell> bin_measure(const DiscreteMeasure& mu, const GridSpec& grid) {
  grid.validate();
  if (grid.dim() != mu.dim()) throw InputError("bin_measure: dimension mismatch");
  std::vector<std::pair<std::size_t, double>> hits;
  hits.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto cell = grid.locate(mu.atom(i));
    if (!cell) {
      throw InputError("bin_measure: atom " + std::to_string(i) + " at " +
                       describe_point(mu.atom(i)) + " lies outside the grid box");
    }
    hits.emplace_back(*cell, mu.weight(i));
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const double vol = grid.cell_volume();
  std::vector<BinnedCell> cells;
  for (const auto& [flat, mass] : hits) {
    if (cells.empty() || cells.back().flat != flat) cells.push_back({flat, 0.0, 0.0});
    cells.back().mass += mass;
  }
  for (auto& c : cells) c.density = c.mass / vol;
  return cells;
}

double binned_entropy(const DiscreteMeasure& mu, const GridSpec& grid) {
  double ent = 0.0;
  for (const auto& c : bin_measure(mu, grid)) ent += c.mass * std::log(c.density);
  return ent;
}

void write_binned_csv(std::ostream& os, const GridSpec& grid, std::span<const BinnedCell> cells) {
  for (std::size_t d = 0; d < grid.dim(); ++d) os << "i" << d << ',';
  for (std::size_t d = 0; d < grid.dim(); ++d) os << "c" << d << ',';
  os << "mass,density\n";
  for (const auto& c : cells) {
    for (std::size_t k : grid.unflatten(c.flat)) os << k << ',';
    for (double x : grid.cell_center(c.flat)) os << x << ',';
    os << c.mass << ',' << c.density << '\n';
  }
}

double second_moment_gap(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, PointView x0,
                         const CostSpec& cost) {
  if (mu1.dim() != mu2.dim() || x0.size() != mu1.dim()) {
    throw InputError("second_moment_gap: dimension mismatch");
  }
  auto moment = [&](const DiscreteMeasure& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const auto c = evaluate_cost(cost, mu.atom(i), x0);
      if (c.forbidden) throw InputError("second_moment_gap: cost is infinite on the support");
      s += mu.weight(i) * c.value;
    }
    return s;
  };
  return std::abs(moment(mu1) - moment(mu2));
}

}  // namespace crystal_ot
