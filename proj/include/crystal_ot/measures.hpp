#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "crystal_ot/geometry.hpp"

namespace crystal_ot {

/// Finitely supported probability measure on R^N.
///
/// Atoms are stored row-major. Construction merges atoms that coincide within
/// 1e-12 componentwise (summing their mass) and requires positive weights that
/// sum to 1 within 1e-10. Immutable after construction.
class DiscreteMeasure {
 public:
  /// `merged_index`, when given, receives the stored atom index of every
  /// input atom.
  DiscreteMeasure(std::size_t dim, std::vector<double> atoms, std::vector<double> weights,
                  std::vector<std::size_t>* merged_index = nullptr);

  /// Same, but rescales arbitrary positive masses to total 1.
  static DiscreteMeasure normalized(std::size_t dim, std::vector<double> atoms,
                                    std::vector<double> masses);
  static DiscreteMeasure dirac(const Point& p);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  PointView atom(std::size_t i) const { return {atoms_.data() + i * dim_, dim_}; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }

  DiscreteMeasure translated(PointView shift) const;

 private:
  DiscreteMeasure() = default;
  std::size_t dim_ = 0;
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

/// Groups of coincident points, in order of first appearance.
struct MergedAtoms {
  std::vector<double> points;            // merged points, row-major
  std::vector<double> masses;            // summed masses per merged point
  std::vector<std::size_t> source_to_merged;  // input index -> merged index
};

enum class MergeMetric { MaxAbs, Euclidean };

MergedAtoms merge_coincident(std::size_t dim, std::span<const double> points,
                             std::span<const double> masses, double tol, MergeMetric metric);

/// Axis-aligned box split into a regular grid of cells. Cell flat indices run
/// with axis 0 fastest.
struct GridSpec {
  Point lo;
  Point hi;
  std::vector<std::size_t> cells;

  /// Throws InputError unless hi > lo componentwise and every count is >= 1.
  void validate() const;
  std::size_t dim() const noexcept { return lo.size(); }
  std::size_t total_cells() const;
  double cell_volume() const;
  double cell_width(std::size_t axis) const;
  Point cell_center(std::size_t flat) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;

  /// Cell holding p. A point on a shared face belongs to the lower-index cell.
  /// nullopt when p is outside the box.
  std::optional<std::size_t> locate(PointView p) const;

  GridSpec refined(std::size_t factor) const;
  GridSpec translated(PointView shift) const;
};

using Density = std::function<double(PointView)>;

/// One atom per cell center with weight proportional to density(center).
/// Cells with zero density carry no atom.
DiscreteMeasure discretize_density(const Density& density, const GridSpec& grid);

struct BinnedCell {
  std::size_t flat = 0;
  double mass = 0.0;
  double density = 0.0;  // mass / cell volume
};

/// Nonempty cells in ascending flat order. Throws InputError naming the first
/// atom outside the box.
std::vector<BinnedCell> bin_measure(const DiscreteMeasure& mu, const GridSpec& grid);

/// Entropy of the piecewise-constant density obtained by binning mu on grid:
/// sum over nonempty cells of p log(p / vol).
double binned_entropy(const DiscreteMeasure& mu, const GridSpec& grid);

/// CSV with one row per nonempty cell: indices, center, mass, density.
void write_binned_csv(std::ostream& os, const GridSpec& grid, std::span<const BinnedCell> cells);

/// |int c(., x0) dmu1 - int c(., x0) dmu2|.
double second_moment_gap(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, PointView x0,
                         const CostSpec& cost);

}  // namespace crystal_ot
