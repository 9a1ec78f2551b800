#include <doctest.h>

#include <cmath>

#include "crystal_ot/error.hpp"
#include "crystal_ot/geometry.hpp"
#include "crystal_ot/rng.hpp"

using namespace crystal_ot;

namespace {

std::vector<Point> face_vectors(const VectorSet& v, const std::vector<std::size_t>& idx) {
  std::vector<Point> out;
  for (auto k : idx) out.emplace_back(v.vector(k).begin(), v.vector(k).end());
  return out;
}

Point random_point(Rng& rng, std::size_t dim, double scale = 5.0) {
  Point p(dim);
  for (double& c : p) c = rng.uniform(-scale, scale);
  return p;
}

}  // namespace

TEST_CASE("crystalline norm: linf and l1 generators") {
  const Point x{3, -4};
  CHECK(crystalline_norm(x, VectorSet::linf(2)) == 4.0);
  CHECK(crystalline_norm(x, VectorSet::l1(2)) == 7.0);
  CHECK(crystalline_norm(Point{0, 0}, VectorSet::l1(2)) == 0.0);
  CHECK(crystalline_norm(Point{0, 0}, VectorSet::linf(2)) == 0.0);
}

TEST_CASE("crystalline norm: dimension mismatch is an input error") {
  CHECK_THROWS_AS(crystalline_norm(Point{1, 2, 3}, VectorSet::linf(2)), InputError);
}

TEST_CASE("vector set: symmetrized, deduplicated, spanning") {
  const auto v = VectorSet::symmetrized(2, {{1, 0}, {0, 1}, {-1, 0}, {1, 1e-13}});
  CHECK(v.size() == 4);
  for (std::size_t k = 0; k < v.size(); ++k) {
    Point neg{-v.vector(k)[0], -v.vector(k)[1]};
    bool found = false;
    for (std::size_t l = 0; l < v.size(); ++l) {
      found = found || (v.vector(l)[0] == neg[0] && v.vector(l)[1] == neg[1]);
    }
    CHECK(found);
  }
  CHECK_THROWS_AS(VectorSet::symmetrized(2, {{1, 1}, {2, 2}}), InputError);
  CHECK_THROWS_AS(VectorSet::symmetrized(2, {{1, 0, 0}}), InputError);
  CHECK(VectorSet::l1(3).size() == 8);
}

TEST_CASE("evaluate_cost examples") {
  const auto linf = VectorSet::linf(2);
  CHECK(evaluate_cost(CostSpec::smoothed_sq(linf, 1), Point{0, 0}, Point{1, 0}).value == 2.0);
  CHECK(evaluate_cost(CostSpec::crystalline_sq(VectorSet::l1(2)), Point{0, 0}, Point{1, 1}).value ==
        4.0);
  CHECK(evaluate_cost(CostSpec::euclidean_sq(), Point{0, 0}, Point{3, 4}).value == 25.0);

  PotentialField zero_phi(2, {0, 0}, {0.0});
  PotentialField zero_psi(2, {1, 0}, {0.0});
  const auto restricted =
      CostSpec::restricted(zero_phi, zero_psi, CostSpec::crystalline_sq(linf), 1e-7);
  const auto c = evaluate_cost(restricted, Point{0, 0}, Point{1, 0});
  CHECK(c.forbidden);

  PotentialField tight_psi(2, {1, 0}, {1.0});
  const auto allowed = CostSpec::restricted(zero_phi, tight_psi, CostSpec::crystalline_sq(linf), 1e-7);
  const auto c2 = evaluate_cost(allowed, Point{0, 0}, Point{1, 0});
  CHECK_FALSE(c2.forbidden);
  CHECK(c2.value == 1.0);
  CHECK_THROWS_AS(evaluate_cost(CostSpec::euclidean_sq(), Point{0, 0}, Point{1, 0, 0}), InputError);
  CHECK_THROWS_AS(CostSpec::smoothed_sq(linf, 0), InputError);
}

TEST_CASE("potential field lookups outside the stored points fail") {
  PotentialField f(2, {0, 0, 1, 1}, {3.0, 4.0});
  CHECK(f.at(Point{1, 1}) == 4.0);
  CHECK(f.at(Point{0, 0}, 1) == 3.0);
  CHECK_THROWS_AS(f.at(Point{0.5, 0.5}), InputError);
}

TEST_CASE("norm equivalence constants") {
  SUBCASE("linf in 2d") {
    const auto b = norm_equivalence_constants(VectorSet::linf(2));
    CHECK(b.c_low == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(b.c_high == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.exact);
  }
  SUBCASE("l1 in 2d") {
    const auto b = norm_equivalence_constants(VectorSet::l1(2));
    CHECK(b.c_low == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.c_high == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("absolute value in 1d") {
    const auto b = norm_equivalence_constants(VectorSet::linf(1));
    CHECK(b.c_low == doctest::Approx(1.0));
    CHECK(b.c_high == doctest::Approx(1.0));
  }
  SUBCASE("linf in 3d and the multistart fallback in 4d") {
    const auto b3 = norm_equivalence_constants(VectorSet::linf(3));
    CHECK(b3.c_low == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
    const auto b4 = norm_equivalence_constants(VectorSet::linf(4));
    CHECK_FALSE(b4.exact);
    CHECK(b4.c_low == doctest::Approx(0.5).epsilon(1e-6));
  }
  CHECK(smoothing_lipschitz_bound(norm_equivalence_constants(VectorSet::linf(2))) ==
        doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("face sets") {
  const auto v = VectorSet::linf(2);
  const auto f1 = face_vectors(v, face_set(Point{0, 0}, Point{-1, 0}, v, 0.0));
  REQUIRE(f1.size() == 1);
  CHECK(f1[0] == Point{1, 0});

  const auto f2 = face_vectors(v, face_set(Point{0, 0}, Point{-1, -1}, v, 0.0));
  REQUIRE(f2.size() == 2);
  CHECK(f2[0] == Point{1, 0});
  CHECK(f2[1] == Point{0, 1});

  const auto f3 = face_vectors(v, face_set(Point{0, 0}, Point{-1, -0.5}, v, 0.6));
  REQUIRE(f3.size() == 2);
  CHECK(f3[1] == Point{0, 1});

  CHECK_THROWS_AS(face_set(Point{1, 1}, Point{1, 1}, v, 0.0), InputError);
  CHECK_THROWS_AS(face_set(Point{0, 0}, Point{1, 1}, v, -1.0), InputError);
}

TEST_CASE("property: triangle inequality and symmetry") {
  Rng rng(11);
  for (const auto& v : {VectorSet::linf(2), VectorSet::l1(2), VectorSet::l1(3),
                        VectorSet::symmetrized(2, {{1, 0.3}, {-0.2, 1}, {0.7, 0.7}})}) {
    for (int k = 0; k < 10000; ++k) {
      const auto x = random_point(rng, v.dim());
      const auto y = random_point(rng, v.dim());
      Point sum(v.dim()), neg(v.dim());
      for (std::size_t d = 0; d < v.dim(); ++d) {
        sum[d] = x[d] + y[d];
        neg[d] = -x[d];
      }
      REQUIRE(crystalline_norm(sum, v) <= crystalline_norm(x, v) + crystalline_norm(y, v) + 1e-10);
      REQUIRE(std::abs(crystalline_norm(neg, v) - crystalline_norm(x, v)) <= 1e-12);
    }
  }
}

TEST_CASE("property: smoothing sandwich and strong convexity") {
  Rng rng(12);
  const auto v = VectorSet::l1(2);
  for (int n : {1, 3, 10, 1000}) {
    const auto smooth = CostSpec::smoothed_sq(v, n);
    const auto crys = CostSpec::crystalline_sq(v);
    const auto eu = CostSpec::euclidean_sq();
    for (int k = 0; k < 2000; ++k) {
      const auto x = random_point(rng, 2);
      const auto y = random_point(rng, 2);
      const double lhs =
          n * (evaluate_cost(smooth, x, y).value - evaluate_cost(crys, x, y).value);
      const double e = evaluate_cost(eu, x, y).value;
      REQUIRE(lhs >= 0.0);
      REQUIRE(std::abs(lhs - e) <= 1e-12 * (1.0 + n * e));

      // N_n^2(l w1 + (1-l) w2) <= l N_n^2(w1) + (1-l) N_n^2(w2) - l(1-l)/n |w1 - w2|^2
      const Point zero{0, 0};
      const double lam = rng.uniform();
      Point mid{lam * x[0] + (1 - lam) * y[0], lam * x[1] + (1 - lam) * y[1]};
      const double f_mid = evaluate_cost(smooth, mid, zero).value;
      const double chord = lam * evaluate_cost(smooth, x, zero).value +
                           (1 - lam) * evaluate_cost(smooth, y, zero).value -
                           lam * (1 - lam) / n * squared_euclidean_distance(x, y);
      REQUIRE(f_mid <= chord + 1e-9);
    }
  }
}

TEST_CASE("property: equivalence constants are certified on random unit vectors") {
  Rng rng(13);
  for (const auto& v : {VectorSet::linf(2), VectorSet::l1(2), VectorSet::linf(3),
                        VectorSet::symmetrized(2, {{1, 0.3}, {-0.2, 1}, {0.7, 0.7}})}) {
    const auto b = norm_equivalence_constants(v);
    for (int k = 0; k < 100000; ++k) {
      Point u(v.dim());
      double r = 0.0;
      for (double& c : u) {
        c = rng.uniform(-1, 1);
        r += c * c;
      }
      if (r == 0.0) continue;
      for (double& c : u) c /= std::sqrt(r);
      const double nrm = crystalline_norm(u, v);
      REQUIRE(nrm >= b.c_low - 1e-9);
      REQUIRE(nrm <= b.c_high + 1e-9);
    }
  }
}

TEST_CASE("property: smoothed distance is dominated by H times d") {
  Rng rng(14);
  const auto v = VectorSet::linf(2);
  const double h = smoothing_lipschitz_bound(norm_equivalence_constants(v), 1);
  for (int k = 0; k < 5000; ++k) {
    const auto x = random_point(rng, 2);
    const auto y = random_point(rng, 2);
    const double dn = std::sqrt(evaluate_cost(CostSpec::smoothed_sq(v, 1), x, y).value);
    REQUIRE(dn <= h * crystalline_distance(x, y, v) + 1e-10);
  }
}
