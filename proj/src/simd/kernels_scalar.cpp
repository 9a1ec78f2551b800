#include "crystal_ot/simd/kernels.hpp"

namespace crystal_ot::simd {
namespace {

void crystalline_row_scalar(const double* x, const double* yt, std::size_t m,
                            std::size_t dim, const double* gen, std::size_t gen_count,
                            double* out) {
  for (std::size_t j = 0; j < m; ++j) {
    double best = 0.0;
    for (std::size_t k = 0; k < gen_count; ++k) {
      const double* g = gen + k * dim;
      double s = (x[0] - yt[j]) * g[0];
      for (std::size_t d = 1; d < dim; ++d) {
        s = s + (x[d] - yt[d * m + j]) * g[d];
      }
      best = (k == 0 || s > best) ? s : best;
    }
    out[j] = best;
  }
}

void sqeuclid_row_scalar(const double* x, const double* yt, std::size_t m,
                         std::size_t dim, double* out) {
  for (std::size_t j = 0; j < m; ++j) {
    double diff = x[0] - yt[j];
    double s = diff * diff;
    for (std::size_t d = 1; d < dim; ++d) {
      diff = x[d] - yt[d * m + j];
      s = s + diff * diff;
    }
    out[j] = s;
  }
}

ArgMin reduced_argmin_scalar(const double* cost, const double* v, double u, std::size_t m) {
  ArgMin best;
  if (m == 0) return best;
  best.index = 0;
  best.value = (cost[0] - u) - v[0];
  for (std::size_t j = 1; j < m; ++j) {
    const double r = (cost[j] - u) - v[j];
    if (r < best.value) {
      best.value = r;
      best.index = static_cast<std::ptrdiff_t>(j);
    }
  }
  return best;
}

std::ptrdiff_t first_below_scalar(const double* cost, const double* v, double u,
                                  std::size_t m, double threshold) {
  for (std::size_t j = 0; j < m; ++j) {
    if ((cost[j] - u) - v[j] < threshold) return static_cast<std::ptrdiff_t>(j);
  }
  return -1;
}

}  // namespace

namespace detail {

const KernelTable& scalar_table() {
  static const KernelTable table{Level::Scalar, crystalline_row_scalar, sqeuclid_row_scalar,
                                 reduced_argmin_scalar, first_below_scalar};
  return table;
}

}  // namespace detail
}  // namespace crystal_ot::simd
