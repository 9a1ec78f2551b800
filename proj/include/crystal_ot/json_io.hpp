#pragma once

// JSON forms of the library types.

#include <json.hpp>

#include "crystal_ot/geometry.hpp"
#include "crystal_ot/interpolation.hpp"
#include "crystal_ot/measures.hpp"
#include "crystal_ot/oracle.hpp"
#include "crystal_ot/ot_core.hpp"
#include "crystal_ot/selection.hpp"

namespace crystal_ot {

using Json = nlohmann::ordered_json;

/// {"dim": N, "vectors": [[...], ...]} with the positive half only, or the
/// strings "linf" / "l1" (dimension from `default_dim`).
VectorSet vector_set_from_json(const Json& j, std::size_t default_dim = 2);
Json to_json(const VectorSet& v);

/// {"dim": N, "atoms": [[...], ...], "weights": [...]}.
DiscreteMeasure measure_from_json(const Json& j);
Json to_json(const DiscreteMeasure& mu);

/// {"lo": [...], "hi": [...], "cells": [...]}.
GridSpec grid_from_json(const Json& j);
Json to_json(const GridSpec& g);

/// {"entries": [[i, j, mass], ...], "value": v}.
Json to_json(const TransportPlan& plan, double value);
Json to_json(const MonotonicityReport& r);
Json to_json(const DoubleMonotonicityReport& r);
Json to_json(const SelectionResult& r);
Json to_json(const ConvexityReport& r);
Json to_json(const OracleResult& r);
Json to_json(const DualPotentials& d);

}  // namespace crystal_ot
