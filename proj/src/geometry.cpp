#include "crystal_ot/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "crystal_ot/error.hpp"

namespace crystal_ot {
namespace {

constexpr double kDuplicateTol = 1e-12;

bool near_equal(PointView a, PointView b, double tol) {
  for (std::size_t d = 0; d < a.size(); ++d) {
    if (std::abs(a[d] - b[d]) > tol) return false;
  }
  return true;
}

void require_dim(PointView x, std::size_t dim, const char* what) {
  if (x.size() != dim) {
    throw InputError(std::string(what) + ": expected dimension " + std::to_string(dim) +
                     ", got " + std::to_string(x.size()));
  }
}

// Same operation order as the row kernels, so pointwise and matrix costs agree
// bit for bit.
double max_projection_of_difference(PointView x, PointView y, const VectorSet& gens) {
  const std::size_t dim = gens.dim();
  const double* g = gens.data().data();
  double best = 0.0;
  for (std::size_t k = 0; k < gens.size(); ++k, g += dim) {
    double s = (x[0] - y[0]) * g[0];
    for (std::size_t d = 1; d < dim; ++d) s = s + (x[d] - y[d]) * g[d];
    best = (k == 0 || s > best) ? s : best;
  }
  return best;
}

std::size_t matrix_rank(const std::vector<double>& rows, std::size_t dim) {
  const auto count = static_cast<Eigen::Index>(rows.size() / dim);
  Eigen::MatrixXd m(count, static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < count; ++r) {
    for (std::size_t d = 0; d < dim; ++d) m(r, static_cast<Eigen::Index>(d)) = rows[r * dim + d];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(1e-10);
  return static_cast<std::size_t>(lu.rank());
}

// Largest Euclidean norm over vertices of {x : <x, v> <= 1 for all v}.
double max_vertex_norm_enumerated(const VectorSet& gens) {
  const std::size_t dim = gens.dim();
  const std::size_t count = gens.size();
  std::vector<std::size_t> pick(dim);
  double best = 0.0;

  // Lexicographic walk over all dim-subsets of the generators.
  for (std::size_t k = 0; k < dim; ++k) pick[k] = k;
  const auto d = static_cast<Eigen::Index>(dim);
  while (true) {
    Eigen::MatrixXd a(d, d);
    for (std::size_t r = 0; r < dim; ++r) {
      const auto v = gens.vector(pick[r]);
      for (std::size_t c = 0; c < dim; ++c) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-12);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(Eigen::VectorXd::Ones(d));
      bool feasible = true;
      for (std::size_t k = 0; k < count && feasible; ++k) {
        const auto v = gens.vector(k);
        double s = 0.0;
        for (std::size_t c = 0; c < dim; ++c) s += x(static_cast<Eigen::Index>(c)) * v[c];
        feasible = s <= 1.0 + 1e-9;
      }
      if (feasible) best = std::max(best, x.norm());
    }

    std::size_t k = dim;
    while (k > 0 && pick[k - 1] == count - dim + (k - 1)) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t r = k; r < dim; ++r) pick[r] = pick[r - 1] + 1;
  }
  return best;
}

// Minimizes ||u|| over the Euclidean unit sphere by projected subgradient
// descent from 64 seeded starts, then snaps to the vertex spanned by the
// active generators.
double min_norm_on_sphere_multistart(const VectorSet& gens) {
  const std::size_t dim = gens.dim();
  std::mt19937_64 rng(0x5eed'c10bULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> u(dim), g(dim);

  auto normalize = [&](std::vector<double>& w) {
    double n = 0.0;
    for (double c : w) n += c * c;
    n = std::sqrt(n);
    for (double& c : w) c /= n;
  };

  for (int start = 0; start < 64; ++start) {
    for (double& c : u) c = normal(rng);
    normalize(u);
    for (int it = 0; it < 2000; ++it) {
      double top = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t k = 0; k < gens.size(); ++k) {
        const auto v = gens.vector(k);
        double s = 0.0;
        for (std::size_t c = 0; c < dim; ++c) s += u[c] * v[c];
        if (s > top) {
          top = s;
          arg = k;
        }
      }
      best = std::min(best, top);
      const auto v = gens.vector(arg);
      double along = 0.0;
      for (std::size_t c = 0; c < dim; ++c) along += v[c] * u[c];
      for (std::size_t c = 0; c < dim; ++c) g[c] = v[c] - along * u[c];
      const double step = 0.5 / std::sqrt(static_cast<double>(it) + 1.0);
      for (std::size_t c = 0; c < dim; ++c) u[c] -= step * g[c];
      normalize(u);
    }

    // Snap: the minimizing direction points at a vertex x with <x, v> = 1 on
    // the active generators.
    double top = 0.0;
    for (std::size_t k = 0; k < gens.size(); ++k) {
      const auto v = gens.vector(k);
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) s += u[c] * v[c];
      top = k == 0 ? s : std::max(top, s);
    }
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < gens.size(); ++k) {
      const auto v = gens.vector(k);
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) s += u[c] * v[c];
      if (top - s <= 1e-4 * std::max(1.0, top)) active.push_back(k);
    }
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(active.size()), d);
    for (std::size_t r = 0; r < active.size(); ++r) {
      const auto v = gens.vector(active[r]);
      for (std::size_t c = 0; c < dim; ++c) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    if (static_cast<std::size_t>(lu.rank()) == dim) {
      const Eigen::VectorXd x =
          a.colPivHouseholderQr().solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(active.size())));
      bool feasible = true;
      for (std::size_t k = 0; k < gens.size() && feasible; ++k) {
        const auto v = gens.vector(k);
        double s = 0.0;
        for (std::size_t c = 0; c < dim; ++c) s += x(static_cast<Eigen::Index>(c)) * v[c];
        feasible = s <= 1.0 + 1e-9;
      }
      if (feasible && x.norm() > 0.0) best = std::min(best, 1.0 / x.norm());
    }
  }
  return best;
}

}  // namespace

VectorSet VectorSet::symmetrized(std::size_t dim, const std::vector<Point>& half) {
  if (dim == 0) throw InputError("VectorSet: dimension must be at least 1");
  std::vector<double> data;
  std::vector<double> neg(dim);
  for (const auto& v : half) {
    require_dim(v, dim, "VectorSet generator");
    if (std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; })) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      if (!std::isfinite(v[d])) throw InputError("VectorSet: non-finite generator component");
      neg[d] = -v[d];
    }
    bool seen = false;
    for (std::size_t k = 0; k * dim < data.size() && !seen; ++k) {
      const PointView w{data.data() + k * dim, dim};
      seen = near_equal(w, v, kDuplicateTol) || near_equal(w, neg, kDuplicateTol);
    }
    if (seen) continue;
    data.insert(data.end(), v.begin(), v.end());
    data.insert(data.end(), neg.begin(), neg.end());
  }
  if (data.empty() || matrix_rank(data, dim) < dim) {
    throw InputError("VectorSet: generators do not span R^" + std::to_string(dim));
  }
  return VectorSet(dim, std::move(data));
}

VectorSet VectorSet::linf(std::size_t dim) {
  std::vector<Point> half;
  for (std::size_t k = 0; k < dim; ++k) {
    Point e(dim, 0.0);
    e[k] = 1.0;
    half.push_back(std::move(e));
  }
  return symmetrized(dim, half);
}

VectorSet VectorSet::l1(std::size_t dim) {
  std::vector<Point> half;
  const std::size_t patterns = std::size_t{1} << (dim - 1);
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    Point v(dim, 1.0);
    for (std::size_t k = 1; k < dim; ++k) {
      if (mask & (std::size_t{1} << (k - 1))) v[k] = -1.0;
    }
    half.push_back(std::move(v));
  }
  return symmetrized(dim, half);
}

std::vector<Point> VectorSet::half() const {
  std::vector<Point> out;
  for (std::size_t k = 0; k < size(); k += 2) {
    const auto v = vector(k);
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

double crystalline_norm(PointView x, const VectorSet& generators) {
  require_dim(x, generators.dim(), "crystalline_norm");
  const Point zero(x.size(), 0.0);
  return max_projection_of_difference(x, zero, generators);
}

double euclidean_norm(PointView x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

double squared_euclidean_distance(PointView x, PointView y) {
  if (x.size() != y.size()) throw InputError("squared_euclidean_distance: dimension mismatch");
  double diff = x[0] - y[0];
  double s = diff * diff;
  for (std::size_t d = 1; d < x.size(); ++d) {
    diff = x[d] - y[d];
    s = s + diff * diff;
  }
  return s;
}

double crystalline_distance(PointView x, PointView y, const VectorSet& generators) {
  require_dim(x, generators.dim(), "crystalline_distance");
  require_dim(y, generators.dim(), "crystalline_distance");
  return max_projection_of_difference(x, y, generators);
}

NormBounds norm_equivalence_constants(const VectorSet& generators) {
  NormBounds out;
  for (std::size_t k = 0; k < generators.size(); ++k) {
    out.c_high = std::max(out.c_high, euclidean_norm(generators.vector(k)));
  }
  if (generators.dim() <= 3) {
    const double r = max_vertex_norm_enumerated(generators);
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw InputError("norm_equivalence_constants: unit ball is degenerate");
    }
    out.c_low = 1.0 / r;
  } else {
    out.c_low = min_norm_on_sphere_multistart(generators);
    out.exact = false;
  }
  if (!(out.c_low > 0.0)) throw InputError("norm_equivalence_constants: generators do not span");
  return out;
}

double smoothing_lipschitz_bound(const NormBounds& bounds, int n) {
  return std::sqrt(1.0 + 1.0 / (static_cast<double>(n) * bounds.c_low * bounds.c_low));
}

std::vector<std::size_t> face_set(PointView z, PointView x, const VectorSet& generators,
                                  double eps) {
  require_dim(z, generators.dim(), "face_set");
  require_dim(x, generators.dim(), "face_set");
  if (eps < 0.0) throw InputError("face_set: eps must be nonnegative");
  if (std::equal(z.begin(), z.end(), x.begin())) {
    throw InputError("face_set: undefined at distance zero (z == x)");
  }
  const double dist = max_projection_of_difference(z, x, generators);
  std::vector<std::size_t> out;
  const std::size_t dim = generators.dim();
  for (std::size_t k = 0; k < generators.size(); ++k) {
    const auto g = generators.vector(k);
    double s = (z[0] - x[0]) * g[0];
    for (std::size_t d = 1; d < dim; ++d) s = s + (z[d] - x[d]) * g[d];
    if (dist - s <= eps) out.push_back(k);
  }
  return out;
}

PotentialField::PotentialField(std::size_t dim, std::vector<double> points,
                               std::vector<double> values)
    : dim_(dim), points_(std::move(points)), values_(std::move(values)) {
  if (dim_ == 0 || points_.size() != values_.size() * dim_) {
    throw InputError("PotentialField: points and values disagree in size");
  }
}

double PotentialField::at(PointView x, std::size_t hint) const {
  require_dim(x, dim_, "PotentialField");
  if (hint < size() && near_equal(point(hint), x, kDuplicateTol)) return values_[hint];
  for (std::size_t k = 0; k < size(); ++k) {
    if (near_equal(point(k), x, kDuplicateTol)) return values_[k];
  }
  throw InputError("PotentialField: point is not in the potential's domain");
}

CostSpec CostSpec::crystalline_sq(VectorSet generators) {
  CostSpec s;
  s.kind_ = Kind::CrystallineSq;
  s.generators_ = std::make_shared<const VectorSet>(std::move(generators));
  return s;
}

CostSpec CostSpec::euclidean_sq() { return CostSpec{}; }

CostSpec CostSpec::smoothed_sq(VectorSet generators, int n) {
  if (n < 1) throw InputError("SmoothedSq: n must be a positive integer");
  CostSpec s;
  s.kind_ = Kind::SmoothedSq;
  s.n_ = n;
  s.generators_ = std::make_shared<const VectorSet>(std::move(generators));
  return s;
}

CostSpec CostSpec::restricted(PotentialField phi, PotentialField psi, CostSpec primary,
                              double tolerance) {
  if (primary.kind() == Kind::Restricted) {
    throw InputError("Restricted: primary cost must itself be finite");
  }
  if (tolerance < 0.0) throw InputError("Restricted: tolerance must be nonnegative");
  CostSpec s;
  s.kind_ = Kind::Restricted;
  s.restricted_ = std::make_shared<const RestrictedData>(
      RestrictedData{std::move(phi), std::move(psi), std::move(primary), tolerance});
  return s;
}

const VectorSet* CostSpec::generators() const noexcept {
  if (kind_ == Kind::Restricted) return restricted_->primary.generators();
  return generators_.get();
}

ExtendedCost evaluate_cost(const CostSpec& spec, PointView x, PointView y) {
  if (x.size() != y.size() || x.empty()) throw InputError("evaluate_cost: dimension mismatch");
  switch (spec.kind()) {
    case CostSpec::Kind::CrystallineSq: {
      const double d = crystalline_distance(x, y, *spec.generators());
      return ExtendedCost::finite(d * d);
    }
    case CostSpec::Kind::EuclideanSq:
      return ExtendedCost::finite(squared_euclidean_distance(x, y));
    case CostSpec::Kind::SmoothedSq: {
      const double d = crystalline_distance(x, y, *spec.generators());
      const double e = squared_euclidean_distance(x, y);
      return ExtendedCost::finite(d * d + e / static_cast<double>(spec.smoothing_index()));
    }
    case CostSpec::Kind::Restricted: {
      const auto& r = *spec.restricted_data();
      const double primary = evaluate_cost(r.primary, x, y).value;
      if (r.phi.at(x) + r.psi.at(y) >= primary - r.tolerance) {
        return ExtendedCost::finite(squared_euclidean_distance(x, y));
      }
      return ExtendedCost::infinite();
    }
  }
  return ExtendedCost::infinite();
}

}  // namespace crystal_ot
