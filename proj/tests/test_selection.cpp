#include <doctest.h>

#include <cmath>
#include <vector>

#include "crystal_ot/error.hpp"
#include "crystal_ot/oracle.hpp"
#include "crystal_ot/selection.hpp"
#include "support.hpp"

using namespace crystal_ot;
using testing_support::random_measure;
using testing_support::two_by_two_mu;
using testing_support::two_by_two_nu;

namespace {

const VectorSet kLinf = VectorSet::linf(2);

bool is_identity_2x2(const TransportPlan& p) {
  return p.size() == 2 && p.mass(0, 0) == 0.5 && p.mass(1, 1) == 0.5;
}

double max_entry_gap(const TransportPlan& a, const TransportPlan& b) {
  double gap = 0.0;
  for (const auto& e : a.entries()) gap = std::max(gap, std::abs(e.mass - b.mass(e.source, e.target)));
  for (const auto& e : b.entries()) gap = std::max(gap, std::abs(e.mass - a.mass(e.source, e.target)));
  return gap;
}

}  // namespace

TEST_CASE("select_plan examples") {
  SUBCASE("2 x 2 tie resolves to the identity") {
    for (auto mode : {SelectMode::Restricted, SelectMode::Lexicographic, SelectMode::Both}) {
      SelectOptions o;
      o.mode = mode;
      const auto r = select_plan(two_by_two_mu(), two_by_two_nu(), kLinf, o);
      CHECK(r.primary_value == doctest::Approx(4.0).epsilon(1e-12));
      CHECK(r.secondary_value == doctest::Approx(4.0).epsilon(1e-12));
      CHECK(is_identity_2x2(r.plan));
    }
    const auto r = select_plan(two_by_two_mu(), two_by_two_nu(), kLinf);
    CHECK(r.restricted_edge_count == 4);
    CHECK(r.unique == std::optional<bool>{true});
    CHECK(r.method == SelectionMethod::PotentialRestriction);
  }
  SUBCASE("identical measures") {
    Rng rng(61);
    const auto mu = random_measure(rng, 7);
    const auto r = select_plan(mu, mu, VectorSet::l1(2));
    CHECK(r.primary_value == 0.0);
    CHECK(r.secondary_value == 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) CHECK(r.plan.mass(i, i) == mu.weight(i));
  }
  SUBCASE("one source atom") {
    const DiscreteMeasure nu(2, {1, 0, 2, 3, 0, 4}, {0.2, 0.3, 0.5});
    const auto r = select_plan(DiscreteMeasure::dirac({0, 0}), nu, kLinf);
    REQUIRE(r.plan.size() == 3);
    CHECK(r.plan.mass(0, 2) == 0.5);
  }
}

TEST_CASE("restrict_and_resolve examples") {
  const auto c1 = CostSpec::crystalline_sq(kLinf);
  SUBCASE("2 x 2: every edge is tight and the identity is chosen") {
    const auto primary = solve_kantorovich(two_by_two_mu(), two_by_two_nu(), c1);
    const auto rs = restrict_and_resolve(primary, build_cost_matrix(c1, two_by_two_mu(), two_by_two_nu()), 1e-7);
    CHECK(rs.allowed == 4);
    CHECK(is_identity_2x2(rs.solution.plan));
    const auto cold = restrict_and_resolve(primary.plan, primary.duals, kLinf, 1e-7);
    CHECK(is_identity_2x2(cold));
  }
  SUBCASE("generic positions keep the unique primary plan") {
    const DiscreteMeasure mu(2, {0, 0, 0.3, 1.7}, {0.4, 0.6});
    const DiscreteMeasure nu(2, {2.1, 0.2, 1.4, 3.3}, {0.5, 0.5});
    const auto primary = solve_kantorovich(mu, nu, c1);
    const auto out = restrict_and_resolve(primary.plan, primary.duals, kLinf, 1e-9);
    CHECK(max_entry_gap(out, primary.plan) == 0.0);
  }
  SUBCASE("single atoms") {
    const auto mu = DiscreteMeasure::dirac({0, 0});
    const auto nu = DiscreteMeasure::dirac({1, 2});
    const auto primary = solve_kantorovich(mu, nu, c1);
    const auto out = restrict_and_resolve(primary.plan, primary.duals, kLinf, 1e-9);
    REQUIRE(out.size() == 1);
    CHECK(out.mass(0, 0) == 1.0);
  }
  SUBCASE("potentials that admit no coupling are a consistency error") {
    const auto primary = solve_kantorovich(two_by_two_mu(), two_by_two_nu(), c1);
    DualPotentials bad = primary.duals;
    bad.phi[1] -= 1.0;
    CHECK_THROWS_AS(restrict_and_resolve(primary.plan, bad, kLinf, 1e-9), ConsistencyError);
  }
}

TEST_CASE("lexicographic selection examples") {
  const auto r = select_plan_lexicographic(two_by_two_mu(), two_by_two_nu(), kLinf, 1e-3);
  CHECK(is_identity_2x2(r.plan));
  CHECK(r.method == SelectionMethod::LexicographicConstraint);
  CHECK(r.eps_weight == 1e-3);

  const auto mu = two_by_two_mu();
  const auto same = select_plan_lexicographic(mu, mu, kLinf);
  CHECK(same.primary_value == 0.0);
  CHECK(same.plan.mass(0, 0) == 0.5);

  const DiscreteMeasure a(2, {0, 0, 1, 0}, {0.5, 0.5});
  const DiscreteMeasure b(2, {0, 3, 1.2, 3}, {0.5, 0.5});
  const auto bound = lexicographic_safety_bound(a, b, kLinf);
  CHECK(bound.from_oracle);
  CHECK(bound.bound > 0.0);
  try {
    select_plan_lexicographic(a, b, kLinf, bound.bound * 2);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("bound") != std::string::npos);
  }
  CHECK_THROWS_AS(select_plan_lexicographic(a, b, kLinf, 0.0), InputError);
  CHECK(max_entry_gap(select_plan_lexicographic(a, b, kLinf).plan,
                      solve_kantorovich(a, b, CostSpec::crystalline_sq(kLinf)).plan) == 0.0);
}

TEST_CASE("smoothed_plan examples") {
  CHECK(is_identity_2x2(smoothed_plan(two_by_two_mu(), two_by_two_nu(), kLinf, 10)));
  const DiscreteMeasure nu(2, {1, 0, 2, 3}, {0.5, 0.5});
  for (int n : {1, 10, 1000}) CHECK(smoothed_plan(DiscreteMeasure::dirac({0, 0}), nu, kLinf, n).size() == 2);
  CHECK_THROWS_AS(smoothed_plan(two_by_two_mu(), two_by_two_nu(), kLinf, 0), InputError);
}

TEST_CASE("double monotonicity examples") {
  const auto sel = select_plan(two_by_two_mu(), two_by_two_nu(), kLinf);
  const auto good = check_double_monotonicity(sel.plan, kLinf, 1e-7);
  CHECK(good.clean());
  CHECK(good.tight_pairs == 1);
  CHECK(good.monot1.worst_margin == 0.0);
  CHECK(good.monot2.worst_margin == doctest::Approx(2.0).epsilon(1e-12));

  const TransportPlan swap(two_by_two_mu(), two_by_two_nu(), {{0, 1, 0.5}, {1, 0, 0.5}});
  const auto bad = check_double_monotonicity(swap, kLinf, 1e-7);
  CHECK(bad.monot1.clean());
  CHECK_FALSE(bad.monot2.clean());
  CHECK(bad.monot2.worst_margin == doctest::Approx(-2.0).epsilon(1e-12));

  const TransportPlan single(DiscreteMeasure::dirac({0, 0}), DiscreteMeasure::dirac({1, 1}), {{0, 0, 1.0}});
  CHECK(check_double_monotonicity(single, kLinf, 1e-7).clean());
}

TEST_CASE("map report examples") {
  const TransportPlan one_each(two_by_two_mu(), two_by_two_nu(), {{0, 0, 0.5}, {1, 1, 0.5}});
  CHECK(check_map_induced(one_each, 1e-9).splitting_fraction == 0.0);
  const TransportPlan product(two_by_two_mu(), two_by_two_nu(),
                              {{0, 0, 0.25}, {0, 1, 0.25}, {1, 0, 0.25}, {1, 1, 0.25}});
  const auto rep = check_map_induced(product, 0.5);
  CHECK(rep.splitting_fraction == 1.0);
  CHECK(rep.worst_diameter == 1.0);
  CHECK(rep.split_sources == 2);
  CHECK(check_map_induced(product, 1.0).splitting_fraction == 0.0);
}

TEST_CASE("selection consistency examples") {
  const auto mu = two_by_two_mu();
  const auto nu = two_by_two_nu();
  SUBCASE("s = 0, t = 1 reproduces the selection") {
    const auto rep = check_selection_consistency(mu, nu, kLinf, {}, 0.0, 1.0);
    CHECK(rep.discrepancy == 0.0);
    CHECK(rep.lhs_secondary == rep.rhs_secondary);
  }
  SUBCASE("interior times on the 2 x 2 example") {
    const auto rep = check_selection_consistency(mu, nu, kLinf, {}, 0.25, 0.75);
    CHECK(rep.discrepancy <= 1e-15);
    CHECK(rep.lhs_entries == 2);
    CHECK(rep.rhs_entries == 2);
    CHECK(rep.lhs_secondary == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("weight concentrated on one entry") {
    const std::vector<double> f{1.0, 0.0};
    const auto rep = check_selection_consistency(mu, nu, kLinf, f, 0.25, 0.75);
    CHECK(rep.discrepancy <= 1e-15);
    CHECK(rep.lhs_entries == 1);
    CHECK(rep.rhs_entries == 1);
  }
  CHECK_THROWS_AS(check_selection_consistency(mu, nu, kLinf, {}, 0.5, 0.5), InputError);
  CHECK_THROWS_AS(check_selection_consistency(mu, nu, kLinf, std::vector<double>{1.0}, 0.0, 1.0),
                  InputError);
}

TEST_CASE("property: selection matches the oracle and the lexicographic method") {
  Rng rng(Rng::stream(62, "selection-oracle"));
  int unique_cases = 0;
  for (int k = 0; k < 200; ++k) {
    const bool lattice = k % 2 == 1;
    const auto mu = random_measure(rng, 6, 2, lattice);
    const auto nu = random_measure(rng, 6, 2, lattice);
    const auto v = (k / 2) % 2 ? VectorSet::l1(2) : kLinf;
    INFO("instance " << k);
    SelectOptions both;
    both.mode = SelectMode::Both;
    const auto r = select_plan(mu, nu, v, both);
    const auto lex = select_plan_lexicographic(mu, nu, v);
    REQUIRE(std::abs(r.primary_value - lex.primary_value) <= 1e-6);
    REQUIRE(std::abs(r.secondary_value - lex.secondary_value) <= 1e-6);
    REQUIRE(r.plan.marginal_error() <= 1e-9);
    REQUIRE(std::abs(plan_cost(r.plan, CostSpec::crystalline_sq(v)) -
                     solve_kantorovich(mu, nu, CostSpec::crystalline_sq(v)).value) <= 1e-7);
    REQUIRE(check_double_monotonicity(r.plan, v, 1e-7).clean());
    if (mu.size() > kOracleMaxAtoms || nu.size() > kOracleMaxAtoms) continue;
    const auto orc = oracle_vertex_enumeration(mu, nu, CostSpec::crystalline_sq(v), CostSpec::euclidean_sq());
    REQUIRE(std::abs(r.primary_value - orc.pi1_value) <= 1e-7);
    REQUIRE(std::abs(r.secondary_value - orc.pi2_value) <= 1e-7);
    REQUIRE(r.unique.has_value());
    REQUIRE(*r.unique == (orc.pi2_plans.size() == 1));
    if (orc.pi2_plans.size() == 1) {
      ++unique_cases;
      REQUIRE(max_entry_gap(r.plan, orc.pi2_plans[0]) <= 1e-9);
      REQUIRE(max_entry_gap(lex.plan, orc.pi2_plans[0]) <= 1e-9);
    }
  }
  CHECK(unique_cases > 100);
}

TEST_CASE("property: smoothed excesses decrease and vanish") {
  Rng rng(63);
  for (int k = 0; k < 30; ++k) {
    const auto mu = random_measure(rng, 6, 2, k % 2 == 0);
    const auto nu = random_measure(rng, 6, 2, k % 2 == 0);
    const auto v = k % 3 ? kLinf : VectorSet::l1(2);
    const auto sel = select_plan(mu, nu, v);
    double prev1 = INFINITY, prev2 = INFINITY;
    for (int n : {1, 10, 100, 1000}) {
      const auto p = smoothed_plan(mu, nu, v, n);
      const double e1 = plan_cost(p, CostSpec::crystalline_sq(v)) - sel.primary_value;
      const double e2 = std::abs(plan_cost(p, CostSpec::euclidean_sq()) - sel.secondary_value);
      REQUIRE(e1 >= -1e-9);
      REQUIRE(e1 <= prev1 + 1e-9);
      REQUIRE(e2 <= prev2 + 1e-9);
      prev1 = e1;
      prev2 = e2;
    }
    REQUIRE(prev1 <= 1e-3 * (1 + sel.secondary_value));
    REQUIRE(prev2 <= 1e-3 * (1 + sel.secondary_value));
  }
}

TEST_CASE("property: consistency holds for f = 1 and random f") {
  Rng rng(64);
  const double pairs[3][2] = {{0, 0.5}, {0.25, 0.75}, {0.5, 1}};
  for (int k = 0; k < 30; ++k) {
    const auto mu = random_measure(rng, 5, 2, k % 2 == 0);
    const auto nu = random_measure(rng, 5, 2, k % 2 == 0);
    const auto v = k % 3 ? kLinf : VectorSet::l1(2);
    const auto sel = select_plan(mu, nu, v);
    INFO("instance " << k);
    for (const auto& st : pairs) {
      const auto rep = check_selection_consistency(sel.plan, v, {}, st[0], st[1]);
      if (rep.rhs_unique.value_or(true)) {
        REQUIRE(rep.discrepancy <= 1e-7);
      } else {
        REQUIRE(std::abs(rep.lhs_secondary - rep.rhs_secondary) <= 1e-6);
      }
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> f(sel.plan.size());
        for (double& x : f) x = rng.uniform(0.1, 2.0);
        const auto r2 = check_selection_consistency(sel.plan, v, f, st[0], st[1]);
        REQUIRE(std::abs(r2.lhs_secondary - r2.rhs_secondary) <= 1e-6);
        REQUIRE(std::abs(r2.lhs_primary - r2.rhs_primary) <= 1e-7);
      }
    }
  }
}
