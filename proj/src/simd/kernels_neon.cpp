#include "crystal_ot/simd/kernels.hpp"

#include <arm_neon.h>

namespace crystal_ot::simd {
namespace {

void crystalline_row_neon(const double* x, const double* yt, std::size_t m,
                          std::size_t dim, const double* gen, std::size_t gen_count,
                          double* out) {
  std::size_t j = 0;
  for (; j + 2 <= m; j += 2) {
    float64x2_t best = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < gen_count; ++k) {
      const double* g = gen + k * dim;
      float64x2_t diff = vsubq_f64(vdupq_n_f64(x[0]), vld1q_f64(yt + j));
      float64x2_t s = vmulq_f64(diff, vdupq_n_f64(g[0]));
      for (std::size_t d = 1; d < dim; ++d) {
        diff = vsubq_f64(vdupq_n_f64(x[d]), vld1q_f64(yt + d * m + j));
        s = vaddq_f64(s, vmulq_f64(diff, vdupq_n_f64(g[d])));
      }
      // s > best ? s : best, matching the scalar tie rule
      best = (k == 0) ? s : vbslq_f64(vcgtq_f64(s, best), s, best);
    }
    vst1q_f64(out + j, best);
  }
  for (; j < m; ++j) {
    double best = 0.0;
    for (std::size_t k = 0; k < gen_count; ++k) {
      const double* g = gen + k * dim;
      double s = (x[0] - yt[j]) * g[0];
      for (std::size_t d = 1; d < dim; ++d) s = s + (x[d] - yt[d * m + j]) * g[d];
      best = (k == 0 || s > best) ? s : best;
    }
    out[j] = best;
  }
}

void sqeuclid_row_neon(const double* x, const double* yt, std::size_t m, std::size_t dim,
                       double* out) {
  std::size_t j = 0;
  for (; j + 2 <= m; j += 2) {
    float64x2_t diff = vsubq_f64(vdupq_n_f64(x[0]), vld1q_f64(yt + j));
    float64x2_t s = vmulq_f64(diff, diff);
    for (std::size_t d = 1; d < dim; ++d) {
      diff = vsubq_f64(vdupq_n_f64(x[d]), vld1q_f64(yt + d * m + j));
      s = vaddq_f64(s, vmulq_f64(diff, diff));
    }
    vst1q_f64(out + j, s);
  }
  for (; j < m; ++j) {
    double diff = x[0] - yt[j];
    double s = diff * diff;
    for (std::size_t d = 1; d < dim; ++d) {
      diff = x[d] - yt[d * m + j];
      s = s + diff * diff;
    }
    out[j] = s;
  }
}

}  // namespace

namespace detail {

// The pricing kernels are memory-bound at two lanes; reuse the scalar ones.
const KernelTable* neon_table() {
  static const KernelTable table{Level::Neon, crystalline_row_neon, sqeuclid_row_neon,
                                 scalar_table().reduced_argmin, scalar_table().first_below};
  return &table;
}

}  // namespace detail
}  // namespace crystal_ot::simd
