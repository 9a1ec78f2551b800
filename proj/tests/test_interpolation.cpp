#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "crystal_ot/error.hpp"
#include "crystal_ot/interpolation.hpp"
#include "crystal_ot/selection.hpp"
#include "support.hpp"

using namespace crystal_ot;
using testing_support::random_measure;
using testing_support::two_by_two_mu;
using testing_support::two_by_two_nu;

namespace {

const Density kUniform = [](PointView) { return 1.0; };

bool same_atoms(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return std::equal(a.atoms().begin(), a.atoms().end(), b.atoms().begin(), b.atoms().end());
}

double total_mass(const DiscreteMeasure& mu) {
  double s = 0.0;
  for (double w : mu.weights()) s += w;
  return s;
}

}  // namespace

TEST_CASE("flow_eval examples") {
  CHECK(flow_eval(Point{0, 0}, Point{2, 2}, 0.5) == Point{1, 1});
  const Point x{0.1, -0.7}, y{3.3, 1e-3};
  CHECK(flow_eval(x, y, 0.0) == x);
  CHECK(flow_eval(x, y, 1.0) == y);
  CHECK_THROWS_AS(flow_eval(x, y, 1.5), InputError);
  CHECK_THROWS_AS(flow_eval(x, y, -0.1), InputError);
}

TEST_CASE("flow_consistency_defect examples") {
  const Point x{0.1, -0.7}, y{3.3, 1e-3};
  CHECK(flow_consistency_defect(x, y, 0.0, 1.0, 0.37) == 0.0);
  CHECK(flow_consistency_defect(x, x, 0.2, 0.9, 0.5) == 0.0);
  CHECK(flow_consistency_defect(x, y, 0.2, 0.9, 0.5) <= 1e-12);
  CHECK_THROWS_AS(flow_consistency_defect(x, y, 0.5, 0.5, 0.5), InputError);
}

TEST_CASE("interpolate_plan examples") {
  const TransportPlan id(two_by_two_mu(), two_by_two_nu(), {{0, 0, 0.5}, {1, 1, 0.5}});
  SUBCASE("endpoints") {
    const auto m0 = interpolate_plan(id, 0.0);
    const auto m1 = interpolate_plan(id, 1.0);
    CHECK(same_atoms(m0, two_by_two_mu()));
    CHECK(same_atoms(m1, two_by_two_nu()));
  }
  SUBCASE("midpoints") {
    const auto m = interpolate_plan(id, 0.5);
    REQUIRE(m.size() == 2);
    CHECK(m.atom(0)[0] == 1.0);
    CHECK(m.atom(0)[1] == 0.0);
    CHECK(m.atom(1)[1] == 1.0);
    CHECK(m.weight(1) == 0.5);
  }
  SUBCASE("crossing entries merge") {
    const TransportPlan swap(two_by_two_mu(), two_by_two_nu(), {{0, 1, 0.5}, {1, 0, 0.5}});
    const auto mid = interpolate_plan_indexed(swap, 0.5);
    REQUIRE(mid.measure.size() == 1);
    CHECK(mid.measure.weight(0) == 1.0);
    CHECK(mid.entry_atom == std::vector<std::size_t>{0, 0});
    CHECK(interpolate_plan(swap, 0.25).size() == 2);
  }
}

TEST_CASE("entropy convexity examples") {
  SUBCASE("pure translation has zero defect") {
    const auto mu = discretize_density(kUniform, GridSpec{{0, 0}, {1, 1}, {8, 8}});
    const auto nu = mu.translated(Point{3, 0});
    const GridSpec fine{{0, 0}, {4, 1}, {32, 8}};
    const auto rep = check_entropy_convexity(mu, nu, VectorSet::linf(2), {0.25, 0.5, 0.75}, fine);
    CHECK(rep.ent0 == doctest::Approx(rep.ent1));
    for (double e : rep.entropies) CHECK(e == doctest::Approx(rep.ent0).epsilon(1e-12));
    CHECK(std::abs(rep.max_defect()) <= 1e-12);
    CHECK(rep.w22 == doctest::Approx(9.0));
  }
  SUBCASE("small times give small defects") {
    const auto mu = discretize_density(kUniform, GridSpec{{0, 0}, {1, 1}, {8, 8}});
    const auto nu = discretize_density(kUniform, GridSpec{{0, 0}, {2, 0.5}, {8, 8}});
    const GridSpec fine{{0, 0}, {2, 1}, {32, 32}};
    const auto rep = check_entropy_convexity(mu, nu, VectorSet::linf(2), {1e-9}, fine);
    CHECK(std::abs(rep.defects[0]) <= 1e-6);
  }
  SUBCASE("area-preserving reshaping stays below the binning tolerance") {
    const auto mu = discretize_density(kUniform, GridSpec{{0, 0}, {1, 1}, {16, 16}});
    const auto nu = discretize_density(kUniform, GridSpec{{0, 0}, {2, 0.5}, {16, 16}});
    const GridSpec fine{{0, 0}, {2, 1}, {32, 32}};
    const auto rep = check_entropy_convexity(mu, nu, VectorSet::linf(2), {0.25, 0.5, 0.75}, fine);
    MESSAGE("reshape max defect at 32 x 32: " << rep.max_defect());
    CHECK(rep.max_defect() <= 0.05);
  }
  SUBCASE("the curvature term lowers the chord") {
    const TransportPlan id(two_by_two_mu(), two_by_two_nu(), {{0, 0, 0.5}, {1, 1, 0.5}});
    const GridSpec fine{{0, 0}, {2, 1}, {4, 2}};
    const auto k0 = entropy_convexity_along(id, 4.0, {0.5}, fine, 0.0);
    const auto k1 = entropy_convexity_along(id, 4.0, {0.5}, fine, 1.0);
    CHECK(k0.chords[0] - k1.chords[0] == doctest::Approx(0.25 * 0.5 * 4.0));
  }
  SUBCASE("interpolants outside the grid are rejected") {
    const TransportPlan id(two_by_two_mu(), two_by_two_nu(), {{0, 0, 0.5}, {1, 1, 0.5}});
    CHECK_THROWS_AS(entropy_convexity_along(id, 4.0, {0.5}, GridSpec{{0, 0}, {0.5, 1}, {2, 2}}), InputError);
  }
}

TEST_CASE("property: the affine flow is consistent to rounding") {
  Rng rng(71);
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const Point x{rng.uniform(0, 4), rng.uniform(0, 4)};
    const Point y{rng.uniform(0, 4), rng.uniform(0, 4)};
    double s = rng.uniform(), t = rng.uniform();
    if (s > t) std::swap(s, t);
    if (s == t) continue;
    worst = std::max(worst, flow_consistency_defect(x, y, s, t, rng.uniform()));
  }
  MESSAGE("worst flow consistency defect: " << worst);
  CHECK(worst <= 1e-12);
}

TEST_CASE("property: interpolation conserves mass, hits endpoints and moves at constant speed") {
  Rng rng(72);
  for (int k = 0; k < 50; ++k) {
    const auto mu = random_measure(rng, 8, 2, k % 2 == 0);
    const auto nu = random_measure(rng, 8, 2, k % 2 == 0);
    const auto v = k % 2 ? VectorSet::l1(2) : VectorSet::linf(2);
    const auto sel = select_plan(mu, nu, v);
    for (double t : {0.0, 0.1, 0.5, 0.9, 1.0}) {
      REQUIRE(std::abs(total_mass(interpolate_plan(sel.plan, t)) - 1.0) <= 1e-10);
    }
    REQUIRE(same_atoms(interpolate_plan(sel.plan, 0.0), mu));
    REQUIRE(same_atoms(interpolate_plan(sel.plan, 1.0), nu));
    for (const auto& e : sel.plan.entries()) {
      const auto x = mu.atom(e.source);
      const auto y = nu.atom(e.target);
      const double d = crystalline_distance(x, y, v);
      const double s = rng.uniform(), t = rng.uniform();
      const double dst = crystalline_distance(flow_eval(x, y, s), flow_eval(x, y, t), v);
      REQUIRE(std::abs(dst - std::abs(t - s) * d) <= 1e-10);
    }
  }
}

TEST_CASE("property: interpolants lie on a constant-speed geodesic") {
  Rng rng(73);
  const double pairs[3][2] = {{0, 0.5}, {0.5, 1}, {0.25, 0.75}};
  for (int k = 0; k < 40; ++k) {
    const auto mu = random_measure(rng, 8, 2, k % 2 == 0);
    const auto nu = random_measure(rng, 8, 2, k % 2 == 0);
    const auto v = k % 2 ? VectorSet::l1(2) : VectorSet::linf(2);
    const auto sel = select_plan(mu, nu, v);
    const double w2 = std::sqrt(sel.primary_value);
    for (const auto& st : pairs) {
      const auto g = check_geodesic(sel.plan, CostSpec::crystalline_sq(v), w2, st[0], st[1]);
      REQUIRE(g.error <= 1e-6 * (1 + w2));
    }
  }
}
