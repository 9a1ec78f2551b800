#pragma once

// Deterministic random streams. A root seed is split into independent named
// streams so that adding a consumer never shifts another's samples.

#include <cstdint>
#include <limits>
#include <string_view>

namespace crystal_ot {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// splitmix64 generator; satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  /// Stream derived from `seed` and a name (FNV-1a of the name, mixed).
  static Rng stream(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    std::uint64_t s = seed ^ h;
    return Rng(splitmix64(s));
  }

  Rng split(std::string_view name) { return stream((*this)(), name); }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return splitmix64(state_); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const auto r = static_cast<unsigned __int128>((*this)()) * n;
    return static_cast<std::uint64_t>(r >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace crystal_ot
