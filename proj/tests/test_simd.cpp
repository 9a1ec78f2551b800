#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "crystal_ot/rng.hpp"
#include "crystal_ot/simd/kernels.hpp"

using namespace crystal_ot;
using namespace crystal_ot::simd;

namespace {

std::vector<const KernelTable*> vector_tables() {
  std::vector<const KernelTable*> out;
  for (Level level : {Level::Avx2, Level::Neon}) {
    if (const auto* t = kernels_for(level)) out.push_back(t);
  }
  return out;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo, double hi, bool lattice) {
  std::vector<double> v(n);
  for (double& x : v) x = lattice ? 0.5 * static_cast<double>(rng.below(9)) : rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("dispatch: scalar is always available and the active table is supported") {
  REQUIRE(kernels_for(Level::Scalar) != nullptr);
  CHECK(level_supported(kernels().level));
  CHECK(level_name(Level::Avx2) == "avx2");
  MESSAGE("active kernel level: " << level_name(kernels().level));
}

TEST_CASE("scalar kernels: small examples") {
  const auto& s = *kernels_for(Level::Scalar);
  const double x[2] = {0, 0};
  const double yt[4] = {1, 3, 0, -4};  // points (1,0) and (3,-4)
  const double linf[8] = {1, 0, -1, 0, 0, 1, 0, -1};
  double out[2];
  s.crystalline_row(x, yt, 2, 2, linf, 4, out);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 4.0);
  s.sqeuclid_row(x, yt, 2, 2, out);
  CHECK(out[1] == 25.0);

  const double cost[5] = {3, 1, 2, 1, 5};
  const double v[5] = {0, 0, 0, 0, 0};
  const auto a = s.reduced_argmin(cost, v, 0.0, 5);
  CHECK(a.index == 1);
  CHECK(a.value == 1.0);
  CHECK(s.reduced_argmin(cost, v, 0.0, 0).index == -1);
  CHECK(s.first_below(cost, v, 0.0, 5, 2.5) == 1);
  CHECK(s.first_below(cost, v, 0.0, 5, 1.0) == -1);
}

TEST_CASE("property: vector kernels match the scalar reference bit for bit") {
  const auto tables = vector_tables();
  if (tables.empty()) {
    MESSAGE("no vector kernels on this machine; equivalence skipped");
    return;
  }
  const auto& ref = *kernels_for(Level::Scalar);
  Rng rng(31);
  for (const auto* t : tables) {
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t m = rng.below(40);
      const std::size_t dim = 1 + rng.below(4);
      const bool lattice = rng.below(2) == 0;
      const auto x = random_vec(rng, dim, -3, 3, lattice);
      const auto yt = random_vec(rng, dim * m, -3, 3, lattice);
      const std::size_t gens = 2 * (1 + rng.below(4));
      const auto gen = random_vec(rng, gens * dim, -1, 1, false);

      std::vector<double> a(m), b(m);
      ref.crystalline_row(x.data(), yt.data(), m, dim, gen.data(), gens, a.data());
      t->crystalline_row(x.data(), yt.data(), m, dim, gen.data(), gens, b.data());
      REQUIRE(same_bits(a, b));

      ref.sqeuclid_row(x.data(), yt.data(), m, dim, a.data());
      t->sqeuclid_row(x.data(), yt.data(), m, dim, b.data());
      REQUIRE(same_bits(a, b));

      auto cost = random_vec(rng, m, -2, 2, lattice);
      const auto v = random_vec(rng, m, -2, 2, lattice);
      for (double& c : cost) {
        if (rng.below(8) == 0) c = std::numeric_limits<double>::infinity();
      }
      const double u = lattice ? 0.5 : rng.uniform(-1, 1);
      const auto ra = ref.reduced_argmin(cost.data(), v.data(), u, m);
      const auto rb = t->reduced_argmin(cost.data(), v.data(), u, m);
      REQUIRE(ra.index == rb.index);
      if (ra.index >= 0) REQUIRE(std::memcmp(&ra.value, &rb.value, sizeof(double)) == 0);

      const double th = lattice ? -0.5 : rng.uniform(-3, 1);
      REQUIRE(ref.first_below(cost.data(), v.data(), u, m, th) ==
              t->first_below(cost.data(), v.data(), u, m, th));
    }
  }
}

TEST_CASE("property: argmin ties resolve to the lowest index at every level") {
  std::vector<const KernelTable*> all{kernels_for(Level::Scalar)};
  for (const auto* t : vector_tables()) all.push_back(t);
  for (const auto* t : all) {
    for (std::size_t m = 1; m <= 33; ++m) {
      for (std::size_t first = 0; first < m; ++first) {
        std::vector<double> cost(m, 1.0), v(m, 0.0);
        for (std::size_t j = first; j < m; j += 3) cost[j] = -1.0;
        const auto a = t->reduced_argmin(cost.data(), v.data(), 0.0, m);
        REQUIRE(a.index == static_cast<std::ptrdiff_t>(first));
        REQUIRE(t->first_below(cost.data(), v.data(), 0.0, m, 0.0) ==
                static_cast<std::ptrdiff_t>(first));
      }
    }
  }
}
