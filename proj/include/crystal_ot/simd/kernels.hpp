#pragma once

// Data-parallel inner loops of the transport pipeline.
//
// Every kernel has a scalar reference implementation and optional vector
// variants. All variants perform the same floating-point operations in the
// same order per output lane, so results are bit-identical across dispatch
// levels. The build disables FMA contraction to keep it that way.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace crystal_ot::simd {

enum class Level : std::uint8_t { Scalar, Avx2, Neon };

std::string_view level_name(Level level);

struct ArgMin {
  std::ptrdiff_t index = -1;  // -1 when the row is empty
  double value = 0.0;
};

struct KernelTable {
  Level level = Level::Scalar;

  // out[j] = max_k sum_d (x[d] - yt[d*m + j]) * gen[k*dim + d]
  // yt holds the target points transposed (dim rows of length m).
  void (*crystalline_row)(const double* x, const double* yt, std::size_t m,
                          std::size_t dim, const double* gen, std::size_t gen_count,
                          double* out);

  // out[j] = sum_d (x[d] - yt[d*m + j])^2
  void (*sqeuclid_row)(const double* x, const double* yt, std::size_t m,
                       std::size_t dim, double* out);

  // argmin_j ((cost[j] - u) - v[j]); ties go to the lowest j.
  ArgMin (*reduced_argmin)(const double* cost, const double* v, double u,
                           std::size_t m);

  // lowest j with ((cost[j] - u) - v[j]) < threshold, or -1.
  std::ptrdiff_t (*first_below)(const double* cost, const double* v, double u,
                                std::size_t m, double threshold);
};

/// Table selected at first use: the best level the CPU supports, unless the
/// CRYSTAL_OT_SIMD environment variable names one (scalar, avx2, neon, auto).
const KernelTable& kernels();

/// Table for an explicit level, or nullptr when the level was not compiled in
/// or the running CPU lacks it.
const KernelTable* kernels_for(Level level);

bool level_supported(Level level);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();
const KernelTable* neon_table();
}  // namespace detail

}  // namespace crystal_ot::simd
