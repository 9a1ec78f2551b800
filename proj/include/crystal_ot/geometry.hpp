#pragma once

// Crystalline (polyhedral) norms on R^N and the transport costs built on them.
//
// A crystalline norm is ||x|| = max_{v in V} <x, v> over a finite symmetric
// generator set V spanning R^N. Its unit ball is a polytope.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace crystal_ot {

using Point = std::vector<double>;
using PointView = std::span<const double>;

/// Symmetric spanning generator set of a crystalline norm.
///
/// Stored row-major (size() rows of dim() doubles). Construction dedupes
/// within 1e-12 componentwise and adds -v for every v.
class VectorSet {
 public:
  /// Builds V from its positive half, adding negatives. Throws InputError if
  /// the vectors do not span R^dim or have the wrong length.
  static VectorSet symmetrized(std::size_t dim, const std::vector<Point>& half);

  /// {+-e_1, ..., +-e_N}: the l-infinity norm.
  static VectorSet linf(std::size_t dim);
  /// {+-(1, s_2, ..., s_N) : s_k = +-1}: the l1 norm.
  static VectorSet l1(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return data_.size() / dim_; }
  PointView vector(std::size_t k) const { return {data_.data() + k * dim_, dim_}; }
  std::span<const double> data() const noexcept { return data_; }

  /// One representative of each {v, -v} pair, in construction order.
  std::vector<Point> half() const;

 private:
  VectorSet(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {}
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

double crystalline_norm(PointView x, const VectorSet& generators);
double euclidean_norm(PointView x);
double squared_euclidean_distance(PointView x, PointView y);
double crystalline_distance(PointView x, PointView y, const VectorSet& generators);

struct NormBounds {
  double c_low = 0.0;   // c_low * |x| <= ||x||
  double c_high = 0.0;  // ||x|| <= c_high * |x|
  bool exact = true;    // false when c_low came from the multi-start search (N > 3)
};

/// Euclidean equivalence constants of the crystalline norm. c_high is the
/// largest generator length; c_low is 1 / (largest vertex norm of the unit
/// ball), found by vertex enumeration for N <= 3.
NormBounds norm_equivalence_constants(const VectorSet& generators);

/// Constant H with d_n <= H d for every n >= 1: H^2 = 1 + 1 / c_low^2.
double smoothing_lipschitz_bound(const NormBounds& bounds, int n = 1);

/// Indices of the generators v with d(z, x) - <z - x, v> <= eps.
std::vector<std::size_t> face_set(PointView z, PointView x, const VectorSet& generators,
                                  double eps);

/// A value that is either a finite nonnegative cost or a forbidden edge.
struct ExtendedCost {
  double value = 0.0;
  bool forbidden = false;

  static ExtendedCost finite(double v) { return {v, false}; }
  static ExtendedCost infinite() { return {0.0, true}; }
  bool operator==(const ExtendedCost&) const = default;
};

/// Scalar function on a finite point set; evaluation outside the set is an
/// input error.
class PotentialField {
 public:
  PotentialField() = default;
  PotentialField(std::size_t dim, std::vector<double> points, std::vector<double> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return values_.size(); }
  PointView point(std::size_t k) const { return {points_.data() + k * dim_, dim_}; }
  double value(std::size_t k) const { return values_[k]; }
  std::span<const double> values() const noexcept { return values_; }

  /// Value at x; x must coincide (within 1e-12 componentwise) with a stored
  /// point. `hint` is checked first.
  double at(PointView x, std::size_t hint = 0) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> points_;
  std::vector<double> values_;
};

class CostSpec {
 public:
  enum class Kind { CrystallineSq, EuclideanSq, SmoothedSq, Restricted };

  struct RestrictedData;

  static CostSpec crystalline_sq(VectorSet generators);
  static CostSpec euclidean_sq();
  /// d^2 + (1/n) d_eu^2.
  static CostSpec smoothed_sq(VectorSet generators, int n);
  /// d_eu^2 where phi(x) + psi(y) >= primary(x, y) - tolerance, forbidden
  /// elsewhere.
  static CostSpec restricted(PotentialField phi, PotentialField psi, CostSpec primary,
                             double tolerance);

  Kind kind() const noexcept { return kind_; }
  int smoothing_index() const noexcept { return n_; }
  /// Generators of the crystalline part; nullptr for EuclideanSq.
  const VectorSet* generators() const noexcept;
  const RestrictedData* restricted_data() const noexcept { return restricted_.get(); }

 private:
  Kind kind_ = Kind::EuclideanSq;
  int n_ = 0;
  std::shared_ptr<const VectorSet> generators_;
  std::shared_ptr<const RestrictedData> restricted_;
};

struct CostSpec::RestrictedData {
  PotentialField phi;
  PotentialField psi;
  CostSpec primary;
  double tolerance = 0.0;
};

ExtendedCost evaluate_cost(const CostSpec& spec, PointView x, PointView y);

}  // namespace crystal_ot
