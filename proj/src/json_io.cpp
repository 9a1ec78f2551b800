#include "crystal_ot/json_io.hpp"

#include <string>

#include "crystal_ot/error.hpp"

namespace crystal_ot {
namespace {

template <class T>
T field(const Json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string(what) + ": missing \"" + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(what) + ": bad \"" + key + "\": " + e.what());
  }
}

std::vector<double> flatten_points(const std::vector<std::vector<double>>& rows, std::size_t dim,
                                   const char* what) {
  std::vector<double> out;
  out.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw ConfigError(std::string(what) + ": point of wrong dimension");
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

Json point_json(PointView p) { return Json(std::vector<double>(p.begin(), p.end())); }

}  // namespace

VectorSet vector_set_from_json(const Json& j, std::size_t default_dim) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "linf") return VectorSet::linf(default_dim);
    if (name == "l1") return VectorSet::l1(default_dim);
    throw ConfigError("generator: unknown name \"" + name + "\"");
  }
  const auto dim = j.contains("dim") ? field<std::size_t>(j, "dim", "generator") : default_dim;
  const auto rows = field<std::vector<std::vector<double>>>(j, "vectors", "generator");
  try {
    return VectorSet::symmetrized(dim, rows);
  } catch (const InputError& e) {
    throw ConfigError(std::string("generator: ") + e.what());
  }
}

Json to_json(const VectorSet& v) {
  Json vecs = Json::array();
  for (const auto& p : v.half()) vecs.push_back(p);
  return Json{{"dim", v.dim()}, {"vectors", vecs}};
}

DiscreteMeasure measure_from_json(const Json& j) {
  const auto dim = field<std::size_t>(j, "dim", "measure");
  const auto rows = field<std::vector<std::vector<double>>>(j, "atoms", "measure");
  auto weights = field<std::vector<double>>(j, "weights", "measure");
  try {
    return DiscreteMeasure(dim, flatten_points(rows, dim, "measure"), std::move(weights));
  } catch (const InputError& e) {
    throw ConfigError(std::string("measure: ") + e.what());
  }
}

Json to_json(const DiscreteMeasure& mu) {
  Json atoms = Json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) atoms.push_back(point_json(mu.atom(i)));
  return Json{{"dim", mu.dim()},
              {"atoms", atoms},
              {"weights", std::vector<double>(mu.weights().begin(), mu.weights().end())}};
}

GridSpec grid_from_json(const Json& j) {
  GridSpec g{field<Point>(j, "lo", "grid"), field<Point>(j, "hi", "grid"),
             field<std::vector<std::size_t>>(j, "cells", "grid")};
  try {
    g.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  return g;
}

Json to_json(const GridSpec& g) { return Json{{"lo", g.lo}, {"hi", g.hi}, {"cells", g.cells}}; }

Json to_json(const TransportPlan& plan, double value) {
  Json entries = Json::array();
  for (const auto& e : plan.entries()) entries.push_back(Json::array({e.source, e.target, e.mass}));
  return Json{{"entries", entries}, {"value", value}};
}

Json to_json(const MonotonicityReport& r) {
  return Json{{"worst_margin", r.worst_margin},
              {"witness", r.witness},
              {"cycles_checked", r.cycles_checked},
              {"violations", r.violations},
              {"tolerance", r.tolerance}};
}

Json to_json(const DoubleMonotonicityReport& r) {
  return Json{{"monot1", to_json(r.monot1)},
              {"monot2", to_json(r.monot2)},
              {"tight_pairs", r.tight_pairs}};
}

Json to_json(const SelectionResult& r) {
  Json out{{"method", method_name(r.method)},
           {"primary_value", r.primary_value},
           {"secondary_value", r.secondary_value},
           {"restricted_edge_count", r.restricted_edge_count},
           {"plan", to_json(r.plan, r.secondary_value)}};
  if (r.unique) out["unique"] = *r.unique;
  if (r.method == SelectionMethod::LexicographicConstraint) out["eps_weight"] = r.eps_weight;
  return out;
}

Json to_json(const ConvexityReport& r) {
  return Json{{"times", r.times},     {"entropies", r.entropies}, {"ent0", r.ent0},
              {"ent1", r.ent1},       {"chords", r.chords},       {"defects", r.defects},
              {"max_defect", r.max_defect()}, {"W22", r.w22},     {"K", r.K}};
}

Json to_json(const OracleResult& r) {
  Json plans = Json::array();
  for (const auto& p : r.pi2_plans) plans.push_back(to_json(p, r.pi2_value));
  Json out{{"Pi1_value", r.pi1_value},
           {"Pi2_value", r.pi2_value},
           {"Pi2_plans", plans},
           {"trees_enumerated", r.trees_enumerated},
           {"vertex_count", r.vertex_count},
           {"max_secondary_cost", r.max_secondary_cost}};
  out["primary_gap"] = r.primary_gap ? Json(*r.primary_gap) : Json(nullptr);
  return out;
}

Json to_json(const DualPotentials& d) { return Json{{"phi", d.phi}, {"psi", d.psi}}; }

}  // namespace crystal_ot
