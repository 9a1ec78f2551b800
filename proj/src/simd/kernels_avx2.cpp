#include "crystal_ot/simd/kernels.hpp"

#include <immintrin.h>

namespace crystal_ot::simd {
namespace {

void crystalline_row_avx2(const double* x, const double* yt, std::size_t m,
                          std::size_t dim, const double* gen, std::size_t gen_count,
                          double* out) {
  std::size_t j = 0;
  for (; j + 4 <= m; j += 4) {
    __m256d best = _mm256_setzero_pd();
    for (std::size_t k = 0; k < gen_count; ++k) {
      const double* g = gen + k * dim;
      __m256d diff = _mm256_sub_pd(_mm256_set1_pd(x[0]), _mm256_loadu_pd(yt + j));
      __m256d s = _mm256_mul_pd(diff, _mm256_set1_pd(g[0]));
      for (std::size_t d = 1; d < dim; ++d) {
        diff = _mm256_sub_pd(_mm256_set1_pd(x[d]), _mm256_loadu_pd(yt + d * m + j));
        s = _mm256_add_pd(s, _mm256_mul_pd(diff, _mm256_set1_pd(g[d])));
      }
      // maxpd(a, b) = a > b ? a : b, the scalar reference's tie rule
      best = (k == 0) ? s : _mm256_max_pd(s, best);
    }
    _mm256_storeu_pd(out + j, best);
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

void sqeuclid_row_avx2(const double* x, const double* yt, std::size_t m, std::size_t dim,
                       double* out) {
  std::size_t j = 0;
  for (; j + 4 <= m; j += 4) {
    __m256d diff = _mm256_sub_pd(_mm256_set1_pd(x[0]), _mm256_loadu_pd(yt + j));
    __m256d s = _mm256_mul_pd(diff, diff);
    for (std::size_t d = 1; d < dim; ++d) {
      diff = _mm256_sub_pd(_mm256_set1_pd(x[d]), _mm256_loadu_pd(yt + d * m + j));
      s = _mm256_add_pd(s, _mm256_mul_pd(diff, diff));
    }
    _mm256_storeu_pd(out + j, s);
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

ArgMin reduced_argmin_avx2(const double* cost, const double* v, double u, std::size_t m) {
  if (m < 8) {
    return detail::scalar_table().reduced_argmin(cost, v, u, m);
  }
  const __m256d uu = _mm256_set1_pd(u);
  __m256d best = _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(cost), uu), _mm256_loadu_pd(v));
  __m256d best_idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  __m256d idx = _mm256_setr_pd(4.0, 5.0, 6.0, 7.0);
  const __m256d four = _mm256_set1_pd(4.0);
  std::size_t j = 4;
  for (; j + 4 <= m; j += 4) {
    const __m256d r =
        _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(cost + j), uu), _mm256_loadu_pd(v + j));
    const __m256d lt = _mm256_cmp_pd(r, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, r, lt);
    best_idx = _mm256_blendv_pd(best_idx, idx, lt);
    idx = _mm256_add_pd(idx, four);
  }
  alignas(32) double vals[4];
  alignas(32) double ids[4];
  _mm256_store_pd(vals, best);
  _mm256_store_pd(ids, best_idx);
  ArgMin out{static_cast<std::ptrdiff_t>(ids[0]), vals[0]};
  for (int lane = 1; lane < 4; ++lane) {
    const auto lane_idx = static_cast<std::ptrdiff_t>(ids[lane]);
    if (vals[lane] < out.value || (vals[lane] == out.value && lane_idx < out.index)) {
      out.value = vals[lane];
      out.index = lane_idx;
    }
  }
  for (; j < m; ++j) {
    const double r = (cost[j] - u) - v[j];
    if (r < out.value) {
      out.value = r;
      out.index = static_cast<std::ptrdiff_t>(j);
    }
  }
  return out;
}

std::ptrdiff_t first_below_avx2(const double* cost, const double* v, double u, std::size_t m,
                                double threshold) {
  const __m256d uu = _mm256_set1_pd(u);
  const __m256d th = _mm256_set1_pd(threshold);
  std::size_t j = 0;
  for (; j + 4 <= m; j += 4) {
    const __m256d r =
        _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(cost + j), uu), _mm256_loadu_pd(v + j));
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(r, th, _CMP_LT_OQ));
    if (mask != 0) return static_cast<std::ptrdiff_t>(j) + __builtin_ctz(static_cast<unsigned>(mask));
  }
  for (; j < m; ++j) {
    if ((cost[j] - u) - v[j] < threshold) return static_cast<std::ptrdiff_t>(j);
  }
  return -1;
}

}  // namespace

namespace detail {

const KernelTable* avx2_table() {
  static const KernelTable table{Level::Avx2, crystalline_row_avx2, sqeuclid_row_avx2,
                                 reduced_argmin_avx2, first_below_avx2};
  return &table;
}

}  // namespace detail
}  // namespace crystal_ot::simd
