#pragma once

// Scenario files: the measures, generator, grids, tolerances and seed of one
// verification run.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crystal_ot/geometry.hpp"
#include "crystal_ot/json_io.hpp"
#include "crystal_ot/measures.hpp"

namespace crystal_ot {

/// A measure given explicitly or as a density sampled on a grid.
struct MeasureSpec {
  std::optional<DiscreteMeasure> atoms;
  std::string density;  // "uniform" or "gaussian"
  GridSpec grid;        // sampling grid; the uniform density fills its box
  Point center;         // gaussian only
  double sigma = 1.0;   // gaussian only

  /// Builds the measure; `cells` > 0 overrides the per-axis cell count.
  DiscreteMeasure build(std::size_t cells = 0) const;
  bool is_density() const noexcept { return !atoms.has_value(); }
};

/// Seeded random small instances.
struct RandomInstances {
  std::size_t count = 0;
  std::size_t max_atoms = 5;
  double lo = 0.0;
  double hi = 4.0;
  double lattice_fraction = 0.5;  // share of instances on a lattice (ties)
  double lattice_step = 0.5;
  int max_weight = 4;
  std::vector<std::string> generators{"linf", "l1"};
};

struct Instance {
  std::string label;
  VectorSet generator;
  DiscreteMeasure mu;
  DiscreteMeasure nu;
};

struct Scenario {
  std::string name;
  std::size_t dim = 2;
  std::optional<VectorSet> generator;
  std::optional<MeasureSpec> mu;
  std::optional<MeasureSpec> nu;
  std::optional<RandomInstances> random;
  std::vector<std::size_t> refine;  // cells per axis for the map trend
  std::vector<double> times{0.25, 0.5, 0.75};
  std::optional<GridSpec> fine_grid;
  std::size_t grid_refine = 1;      // extra fine-grid levels, each doubling
  std::map<std::string, double> tolerances;
  std::uint64_t seed = 0;
  double K = 0.0;
  std::set<std::string> checks;     // empty: defaults for the scenario kind
  std::string inject_plan;          // "" or "swap"
  std::vector<int> smooth_sequence{1, 10, 100, 1000};
  std::size_t consistency_trials = 20;
  std::size_t flow_samples = 100000;

  /// Named tolerance, falling back to the built-in default.
  double tol(const std::string& key) const;
  bool check_enabled(const std::string& check) const;
};

/// Every check name the suite knows.
const std::vector<std::string>& known_checks();
const std::map<std::string, double>& default_tolerances();

/// Throws ConfigError on any malformed or inconsistent field.
Scenario parse_scenario(const Json& j);
Scenario load_scenario(const std::filesystem::path& path);

/// The instances a scenario verifies: the seeded random set, or the single
/// mu/nu pair (density measures at the finest refinement level).
std::vector<Instance> scenario_instances(const Scenario& s);

}  // namespace crystal_ot
