#include <doctest.h>

#include <cmath>

#include "crystal_ot/error.hpp"
#include "crystal_ot/oracle.hpp"
#include "support.hpp"

using namespace crystal_ot;
using testing_support::random_measure;
using testing_support::two_by_two_mu;
using testing_support::two_by_two_nu;

namespace {

const CostSpec kLinf = CostSpec::crystalline_sq(VectorSet::linf(2));
const CostSpec kEu = CostSpec::euclidean_sq();

}  // namespace

TEST_CASE("oracle examples") {
  SUBCASE("2 x 2 tie: both vertices cost 4, identity wins the secondary") {
    const auto r = oracle_vertex_enumeration(two_by_two_mu(), two_by_two_nu(), kLinf, kEu);
    CHECK(r.pi1_value == 4.0);
    CHECK(r.pi2_value == 4.0);
    CHECK(r.vertex_count == 2);
    CHECK_FALSE(r.primary_gap.has_value());
    REQUIRE(r.pi2_plans.size() == 1);
    CHECK(r.pi2_plans[0].mass(0, 0) == 0.5);
    CHECK(r.pi2_plans[0].mass(1, 1) == 0.5);
    CHECK(r.max_secondary_cost == 5.0);
  }
  SUBCASE("identical two-atom measures") {
    const auto mu = two_by_two_mu();
    const auto r = oracle_vertex_enumeration(mu, mu, kLinf, kEu);
    CHECK(r.pi1_value == 0.0);
    CHECK(r.pi2_value == 0.0);
    REQUIRE(r.pi2_plans.size() == 1);
    CHECK(r.pi2_plans[0].mass(1, 1) == 0.5);
  }
  SUBCASE("one source atom forces the product plan") {
    const DiscreteMeasure nu(2, {1, 0, 2, 3, 0, 4}, {0.2, 0.3, 0.5});
    const auto r = oracle_vertex_enumeration(DiscreteMeasure::dirac({0, 0}), nu, kLinf, kEu);
    CHECK(r.vertex_count == 1);
    CHECK(r.trees_enumerated == 1);
    REQUIRE(r.pi2_plans.size() == 1);
    CHECK(r.pi2_plans[0].size() == 3);
    CHECK(r.pi1_value == doctest::Approx(0.2 * 1 + 0.3 * 9 + 0.5 * 16));
  }
}

TEST_CASE("oracle rejects supports beyond five atoms") {
  const DiscreteMeasure big = DiscreteMeasure::normalized(1, {0, 1, 2, 3, 4, 5}, {1, 1, 1, 1, 1, 1});
  const auto small = DiscreteMeasure::dirac({0});
  const auto c = CostSpec::euclidean_sq();
  CHECK_THROWS_AS(oracle_vertex_enumeration(big, small, c, c), SizeError);
  CHECK_THROWS_AS(oracle_vertex_enumeration(small, big, c, c), SizeError);
}

TEST_CASE("spanning tree counts match the complete bipartite formula") {
  // K_{m,n} has m^(n-1) n^(m-1) spanning trees.
  for (std::size_t m = 1; m <= 4; ++m) {
    for (std::size_t n = 1; n <= 4; ++n) {
      std::vector<double> a(m), b(n);
      for (std::size_t i = 0; i < m; ++i) a[i] = static_cast<double>(i);
      for (std::size_t j = 0; j < n; ++j) b[j] = static_cast<double>(j) + 0.5;
      const auto mu = DiscreteMeasure::normalized(1, a, std::vector<double>(m, 1.0));
      const auto nu = DiscreteMeasure::normalized(1, b, std::vector<double>(n, 1.0));
      std::size_t trees = 0;
      enumerate_vertices(mu, nu, kEu, kEu, &trees);
      const double expect = std::pow(double(m), double(n - 1)) * std::pow(double(n), double(m - 1));
      CHECK(trees == static_cast<std::size_t>(expect));
    }
  }
}

TEST_CASE("property: every oracle vertex is a feasible coupling") {
  Rng rng(52);
  for (int k = 0; k < 40; ++k) {
    const auto mu = random_measure(rng, 5, 2, k % 2 == 0);
    const auto nu = random_measure(rng, 5, 2, k % 2 == 0);
    const auto verts = enumerate_vertices(mu, nu, kLinf, kEu);
    REQUIRE_FALSE(verts.empty());
    for (const auto& v : verts) {
      for (std::size_t i = 0; i < mu.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < nu.size(); ++j) {
          REQUIRE(v.mass[i * nu.size() + j] >= 0.0);
          row += v.mass[i * nu.size() + j];
        }
        REQUIRE(std::abs(row - mu.weight(i)) <= 1e-12);
      }
      for (std::size_t j = 0; j < nu.size(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) col += v.mass[i * nu.size() + j];
        REQUIRE(std::abs(col - nu.weight(j)) <= 1e-12);
      }
    }
    const auto r = oracle_vertex_enumeration(mu, nu, kLinf, kEu);
    for (const auto& v : verts) {
      REQUIRE(v.primary >= r.pi1_value - 1e-9);
      if (v.primary <= r.pi1_value + 1e-9) REQUIRE(v.secondary >= r.pi2_value - 1e-9);
    }
    for (const auto& p : r.pi2_plans) REQUIRE(p.marginal_error() <= 1e-12);
  }
}
