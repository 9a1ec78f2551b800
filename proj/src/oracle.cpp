#include "crystal_ot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "crystal_ot/error.hpp"

namespace crystal_ot {
namespace {

constexpr double kFeasTol = 1e-12;
constexpr double kTieTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Union-find without path compression so unions can be undone.
class RollbackUnionFind {
 public:
  explicit RollbackUnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }
  std::size_t find(std::size_t x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    history_.push_back(b);
    return true;
  }
  void undo() {
    const std::size_t b = history_.back();
    history_.pop_back();
    size_[parent_[b]] -= size_[b];
    parent_[b] = b;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> history_;
};

struct Enumerator {
  std::size_t n, m;
  std::span<const double> supply, demand;
  std::vector<std::size_t> chosen;
  RollbackUnionFind uf;
  std::size_t trees = 0;
  std::vector<std::vector<double>> feasible;

  Enumerator(std::span<const double> a, std::span<const double> b)
      : n(a.size()), m(b.size()), supply(a), demand(b), uf(a.size() + b.size()) {}

  void run(std::size_t edge) {
    const std::size_t need = n + m - 1;
    if (chosen.size() == need) {
      ++trees;
      evaluate();
      return;
    }
    const std::size_t total = n * m;
    if (chosen.size() + (total - edge) < need) return;
    const std::size_t i = edge / m;
    const std::size_t j = edge % m;
    if (uf.unite(i, n + j)) {
      chosen.push_back(edge);
      run(edge + 1);
      chosen.pop_back();
      uf.undo();
    }
    run(edge + 1);
  }

  // Tree flows by repeatedly settling a leaf.
  void evaluate() {
    const std::size_t nodes = n + m;
    std::vector<double> rest(nodes);
    for (std::size_t i = 0; i < n; ++i) rest[i] = supply[i];
    for (std::size_t j = 0; j < m; ++j) rest[n + j] = demand[j];
    std::vector<std::size_t> degree(nodes, 0);
    for (std::size_t e : chosen) {
      ++degree[e / m];
      ++degree[n + e % m];
    }
    std::vector<std::uint8_t> done(chosen.size(), 0);
    std::vector<double> flow(n * m, 0.0);
    for (std::size_t settled = 0; settled < chosen.size(); ++settled) {
      std::size_t pick = chosen.size();
      std::size_t leaf = 0;
      for (std::size_t k = 0; k < chosen.size() && pick == chosen.size(); ++k) {
        if (done[k]) continue;
        const std::size_t a = chosen[k] / m;
        const std::size_t b = n + chosen[k] % m;
        if (degree[a] == 1) {
          pick = k;
          leaf = a;
        } else if (degree[b] == 1) {
          pick = k;
          leaf = b;
        }
      }
      const std::size_t a = chosen[pick] / m;
      const std::size_t b = n + chosen[pick] % m;
      const std::size_t other = leaf == a ? b : a;
      const double f = rest[leaf];
      if (f < -kFeasTol) return;
      flow[chosen[pick]] = f < 0.0 ? 0.0 : f;
      rest[leaf] = 0.0;
      rest[other] -= f;
      --degree[a];
      --degree[b];
      done[pick] = 1;
    }
    for (double r : rest) {
      if (std::abs(r) > 1e-9) return;
    }
    for (double& f : flow) {
      if (f <= kFeasTol) f = 0.0;
    }
    feasible.push_back(std::move(flow));
  }
};

double dense_cost(const std::vector<double>& mass, const std::vector<ExtendedCost>& cost) {
  double total = 0.0;
  for (std::size_t a = 0; a < mass.size(); ++a) {
    if (mass[a] == 0.0) continue;
    if (cost[a].forbidden) return kInf;
    total += mass[a] * cost[a].value;
  }
  return total;
}

}  // namespace

std::vector<OracleVertex> enumerate_vertices(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                             const CostSpec& primary, const CostSpec& secondary,
                                             std::size_t* trees) {
  if (mu.size() > kOracleMaxAtoms || nu.size() > kOracleMaxAtoms) {
    throw SizeError("oracle: supports of size " + std::to_string(mu.size()) + " x " +
                    std::to_string(nu.size()) + " exceed " + std::to_string(kOracleMaxAtoms));
  }
  if (mu.dim() != nu.dim()) throw InputError("oracle: measures differ in dimension");
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  std::vector<ExtendedCost> c1(n * m), c2(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      c1[i * m + j] = evaluate_cost(primary, mu.atom(i), nu.atom(j));
      c2[i * m + j] = evaluate_cost(secondary, mu.atom(i), nu.atom(j));
    }
  }

  Enumerator en(mu.weights(), nu.weights());
  en.run(0);
  if (trees) *trees = en.trees;

  // Degenerate vertices come from several trees; keep one copy.
  std::map<std::vector<long long>, std::size_t> seen;
  std::vector<OracleVertex> out;
  for (auto& flow : en.feasible) {
    std::vector<long long> key(flow.size());
    for (std::size_t a = 0; a < flow.size(); ++a) key[a] = std::llround(flow[a] * 1e11);
    if (!seen.emplace(std::move(key), out.size()).second) continue;
    OracleVertex v;
    v.primary = dense_cost(flow, c1);
    v.secondary = dense_cost(flow, c2);
    v.mass = std::move(flow);
    out.push_back(std::move(v));
  }
  return out;
}

OracleResult oracle_vertex_enumeration(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const CostSpec& primary, const CostSpec& secondary) {
  OracleResult res;
  const auto vertices = enumerate_vertices(mu, nu, primary, secondary, &res.trees_enumerated);
  res.vertex_count = vertices.size();
  const std::size_t m = nu.size();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto c = evaluate_cost(secondary, mu.atom(i), nu.atom(j));
      if (!c.forbidden) res.max_secondary_cost = std::max(res.max_secondary_cost, c.value);
    }
  }

  res.pi1_value = kInf;
  for (const auto& v : vertices) res.pi1_value = std::min(res.pi1_value, v.primary);
  if (!std::isfinite(res.pi1_value)) {
    throw InfeasibleError("oracle: every vertex uses a forbidden edge", 0);
  }
  auto in_pi1 = [&](const OracleVertex& v) { return v.primary <= res.pi1_value + kTieTol; };

  res.pi2_value = kInf;
  for (const auto& v : vertices) {
    if (in_pi1(v)) {
      res.pi2_value = std::min(res.pi2_value, v.secondary);
    } else if (std::isfinite(v.primary)) {
      const double gap = v.primary - res.pi1_value;
      if (!res.primary_gap || gap < *res.primary_gap) res.primary_gap = gap;
    }
  }
  for (const auto& v : vertices) {
    if (!in_pi1(v) || v.secondary > res.pi2_value + kTieTol) continue;
    std::vector<PlanEntry> entries;
    for (std::size_t a = 0; a < v.mass.size(); ++a) {
      if (v.mass[a] > 0.0) entries.push_back({a / m, a % m, v.mass[a]});
    }
    res.pi2_plans.emplace_back(mu, nu, std::move(entries));
  }
  return res;
}

}  // namespace crystal_ot
