#include "crystal_ot/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "crystal_ot/error.hpp"
#include "crystal_ot/rng.hpp"

namespace crystal_ot {
namespace {

const std::vector<std::string> kDensityDefaults{
    "primary_optimality", "pi1_membership",   "double_monotonicity", "cyclical_monotonicity",
    "consistency",        "geodesic",         "flow_consistency",    "map_trend",
    "entropy_convexity"};

const std::vector<std::string> kInstanceDefaults{
    "primary_optimality",    "oracle_agreement", "method_agreement", "pi1_membership",
    "double_monotonicity",   "cyclical_monotonicity", "smoothed_convergence", "consistency",
    "geodesic",              "flow_consistency", "entropy_convexity"};

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: bad \"") + key + "\": " + e.what());
  }
}

MeasureSpec parse_measure(const Json& j, std::size_t dim) {
  MeasureSpec spec;
  if (!j.is_object()) throw ConfigError("scenario: measure must be an object");
  if (j.contains("atoms")) {
    Json m = j;
    if (!m.contains("dim")) m["dim"] = dim;
    spec.atoms = measure_from_json(m);
    if (spec.atoms->dim() != dim) throw ConfigError("scenario: measure dimension differs");
    return spec;
  }
  if (!j.contains("density")) {
    throw ConfigError("scenario: measure needs \"atoms\" or \"density\"");
  }
  spec.density = get_or<std::string>(j, "density", "");
  if (!j.contains("grid")) throw ConfigError("scenario: density measure needs \"grid\"");
  spec.grid = grid_from_json(j.at("grid"));
  if (spec.grid.dim() != dim) throw ConfigError("scenario: density grid dimension differs");
  if (spec.density == "gaussian") {
    spec.center = get_or<Point>(j, "center", Point(dim, 0.0));
    spec.sigma = get_or<double>(j, "sigma", 1.0);
    if (spec.center.size() != dim || !(spec.sigma > 0.0)) {
      throw ConfigError("scenario: gaussian needs a center of the right dimension and sigma > 0");
    }
  } else if (spec.density != "uniform") {
    throw ConfigError("scenario: unknown density \"" + spec.density + "\"");
  }
  return spec;
}

}  // namespace

DiscreteMeasure MeasureSpec::build(std::size_t cells) const {
  if (atoms) return *atoms;
  GridSpec g = grid;
  if (cells > 0) g.cells.assign(g.dim(), cells);
  if (density == "uniform") return discretize_density([](PointView) { return 1.0; }, g);
  const Point c = center;
  const double two_var = 2.0 * sigma * sigma;
  return discretize_density(
      [c, two_var](PointView x) {
        double r2 = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
        return std::exp(-r2 / two_var);
      },
      g);
}

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"primary", 1e-7},          {"marginal", 1e-9},         {"oracle", 1e-7},
      {"agreement", 1e-6},        {"plan_match", 1e-7},       {"monotonicity", 1e-7},
      {"smoothed", 1e-3},         {"smoothed_noise", 1e-9},   {"consistency", 1e-7},
      {"consistency_objective", 1e-6}, {"geodesic", 1e-6},    {"constant_speed", 1e-10},
      {"flow", 1e-12},            {"map_fraction", 0.05},     {"convexity", 0.05},
      {"convexity_trend", 0.1}};
  return t;
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> all{
      "primary_optimality",  "oracle_agreement",      "method_agreement",
      "pi1_membership",      "double_monotonicity",   "cyclical_monotonicity",
      "smoothed_convergence", "consistency",          "geodesic",
      "flow_consistency",    "map_trend",             "entropy_convexity"};
  return all;
}

double Scenario::tol(const std::string& key) const {
  if (auto it = tolerances.find(key); it != tolerances.end()) return it->second;
  return default_tolerances().at(key);
}

bool Scenario::check_enabled(const std::string& check) const {
  if (!checks.empty()) return checks.count(check) > 0;
  const bool density = (mu && mu->is_density()) || (nu && nu->is_density());
  const auto& defaults = density ? kDensityDefaults : kInstanceDefaults;
  if (check == "entropy_convexity" && !fine_grid) return false;
  if (check == "map_trend" && refine.size() < 2) return false;
  return std::find(defaults.begin(), defaults.end(), check) != defaults.end();
}

Scenario parse_scenario(const Json& j) {
  if (!j.is_object()) throw ConfigError("scenario: top level must be an object");
  Scenario s;
  s.name = get_or<std::string>(j, "name", "");
  if (s.name.empty()) throw ConfigError("scenario: missing \"name\"");
  if (s.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("scenario: name must not contain path separators");
  }
  s.dim = get_or<std::size_t>(j, "dim", 2);
  if (s.dim == 0) throw ConfigError("scenario: dim must be positive");
  s.seed = get_or<std::uint64_t>(j, "seed", 0);
  s.K = get_or<double>(j, "K", 0.0);
  s.times = get_or<std::vector<double>>(j, "times", s.times);
  for (double t : s.times) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("scenario: times must lie in (0, 1)");
  }
  s.refine = get_or<std::vector<std::size_t>>(j, "refine", {});
  s.grid_refine = get_or<std::size_t>(j, "grid_refine", 1);
  s.smooth_sequence = get_or<std::vector<int>>(j, "smooth_sequence", s.smooth_sequence);
  for (int n : s.smooth_sequence) {
    if (n < 1) throw ConfigError("scenario: smooth_sequence entries must be >= 1");
  }
  s.consistency_trials = get_or<std::size_t>(j, "consistency_trials", s.consistency_trials);
  s.flow_samples = get_or<std::size_t>(j, "flow_samples", s.flow_samples);

  if (j.contains("generator")) s.generator = vector_set_from_json(j.at("generator"), s.dim);
  if (s.generator && s.generator->dim() != s.dim) {
    throw ConfigError("scenario: generator dimension differs from dim");
  }
  if (j.contains("mu")) s.mu = parse_measure(j.at("mu"), s.dim);
  if (j.contains("nu")) s.nu = parse_measure(j.at("nu"), s.dim);
  if (j.contains("random_instances")) {
    const auto& r = j.at("random_instances");
    RandomInstances ri;
    ri.count = get_or<std::size_t>(r, "count", 0);
    ri.max_atoms = get_or<std::size_t>(r, "max_atoms", ri.max_atoms);
    ri.lo = get_or<double>(r, "lo", ri.lo);
    ri.hi = get_or<double>(r, "hi", ri.hi);
    ri.lattice_fraction = get_or<double>(r, "lattice_fraction", ri.lattice_fraction);
    ri.lattice_step = get_or<double>(r, "lattice_step", ri.lattice_step);
    ri.max_weight = get_or<int>(r, "max_weight", ri.max_weight);
    ri.generators = get_or<std::vector<std::string>>(r, "generators", ri.generators);
    if (ri.max_atoms == 0 || !(ri.hi > ri.lo) || ri.max_weight < 1 || ri.generators.empty() ||
        !(ri.lattice_step > 0.0)) {
      throw ConfigError("scenario: invalid random_instances block");
    }
    for (const auto& g : ri.generators) vector_set_from_json(Json(g), s.dim);
    s.random = ri;
  }
  if (s.random && (s.mu || s.nu)) {
    throw ConfigError("scenario: give either random_instances or mu/nu, not both");
  }
  if (!s.random && (!s.mu || !s.nu)) {
    throw ConfigError("scenario: mu and nu are required without random_instances");
  }
  if (!s.random && !s.generator) throw ConfigError("scenario: missing \"generator\"");

  if (j.contains("fine_grid")) {
    s.fine_grid = grid_from_json(j.at("fine_grid"));
    if (s.fine_grid->dim() != s.dim) throw ConfigError("scenario: fine_grid dimension differs");
  }
  if (j.contains("tolerances")) {
    for (const auto& [key, value] : j.at("tolerances").items()) {
      if (!default_tolerances().count(key)) {
        throw ConfigError("scenario: unknown tolerance \"" + key + "\"");
      }
      if (!value.is_number() || !(value.get<double>() >= 0.0)) {
        throw ConfigError("scenario: tolerance \"" + key + "\" must be a nonnegative number");
      }
      s.tolerances[key] = value.get<double>();
    }
  }
  if (j.contains("checks")) {
    for (const auto& c : get_or<std::vector<std::string>>(j, "checks", {})) {
      const auto& all = known_checks();
      if (std::find(all.begin(), all.end(), c) == all.end()) {
        throw ConfigError("scenario: unknown check \"" + c + "\"");
      }
      s.checks.insert(c);
    }
  }
  if (j.contains("debug")) {
    s.inject_plan = get_or<std::string>(j.at("debug"), "inject_plan", "");
    if (!s.inject_plan.empty() && s.inject_plan != "swap") {
      throw ConfigError("scenario: unknown inject_plan \"" + s.inject_plan + "\"");
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario " + path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

std::vector<Instance> scenario_instances(const Scenario& s) {
  std::vector<Instance> out;
  if (!s.random) {
    const std::size_t cells = s.refine.empty() ? 0 : s.refine.back();
    out.push_back({s.name, *s.generator, s.mu->build(cells), s.nu->build(cells)});
    return out;
  }
  const auto& r = *s.random;
  Rng rng = Rng::stream(s.seed, "instances");
  auto coordinate = [&](bool lattice) {
    if (!lattice) return rng.uniform(r.lo, r.hi);
    const auto steps = static_cast<std::uint64_t>(std::floor((r.hi - r.lo) / r.lattice_step));
    return r.lo + r.lattice_step * static_cast<double>(rng.below(steps + 1));
  };
  auto measure = [&](bool lattice) {
    const std::size_t n = 1 + rng.below(r.max_atoms);
    std::vector<double> atoms(n * s.dim), weights(n);
    for (double& c : atoms) c = coordinate(lattice);
    for (double& w : weights) w = static_cast<double>(1 + rng.below(r.max_weight));
    return DiscreteMeasure::normalized(s.dim, std::move(atoms), std::move(weights));
  };
  for (std::size_t k = 0; k < r.count; ++k) {
    const auto& gname = r.generators[k % r.generators.size()];
    const bool lattice = rng.uniform() < r.lattice_fraction;
    auto mu = measure(lattice);
    auto nu = measure(lattice);
    out.push_back({s.name + "#" + std::to_string(k) + "-" + gname + (lattice ? "-lattice" : ""),
                   vector_set_from_json(Json(gname), s.dim), std::move(mu), std::move(nu)});
  }
  return out;
}

}  // namespace crystal_ot
