#include "crystal_ot/cost_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "crystal_ot/error.hpp"
#include "crystal_ot/simd/kernels.hpp"

namespace crystal_ot {
namespace {

std::vector<double> transpose_points(const DiscreteMeasure& nu) {
  const std::size_t m = nu.size();
  const std::size_t dim = nu.dim();
  std::vector<double> yt(dim * m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t d = 0; d < dim; ++d) yt[d * m + j] = nu.atom(j)[d];
  }
  return yt;
}

// Fills `out` (rows*cols) with a finite cost kind.
void fill_finite(const CostSpec& cost, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                 std::vector<double>& out) {
  const auto& k = simd::kernels();
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  const std::size_t dim = mu.dim();
  const auto yt = transpose_points(nu);
  out.assign(n * m, 0.0);
  std::vector<double> scratch(m);

  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * m;
    const double* x = mu.atom(i).data();
    switch (cost.kind()) {
      case CostSpec::Kind::CrystallineSq: {
        const auto& g = *cost.generators();
        k.crystalline_row(x, yt.data(), m, dim, g.data().data(), g.size(), row);
        for (std::size_t j = 0; j < m; ++j) row[j] = row[j] * row[j];
        break;
      }
      case CostSpec::Kind::EuclideanSq:
        k.sqeuclid_row(x, yt.data(), m, dim, row);
        break;
      case CostSpec::Kind::SmoothedSq: {
        const auto& g = *cost.generators();
        const auto n_s = static_cast<double>(cost.smoothing_index());
        k.crystalline_row(x, yt.data(), m, dim, g.data().data(), g.size(), row);
        k.sqeuclid_row(x, yt.data(), m, dim, scratch.data());
        for (std::size_t j = 0; j < m; ++j) row[j] = row[j] * row[j] + scratch[j] / n_s;
        break;
      }
      case CostSpec::Kind::Restricted:
        throw InputError("fill_finite: restricted cost is not finite");
    }
  }
}

}  // namespace

std::size_t CostMatrix::allowed_count() const {
  if (forbidden.empty()) return values.size();
  return static_cast<std::size_t>(std::count(forbidden.begin(), forbidden.end(), 0));
}

double CostMatrix::max_abs_finite() const {
  double best = 0.0;
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (forbidden.empty() || forbidden[a] == 0) best = std::max(best, std::abs(values[a]));
  }
  return best;
}

CostMatrix build_cost_matrix(const CostSpec& cost, const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) throw InputError("build_cost_matrix: measures differ in dimension");
  if (const auto* g = cost.generators(); g && g->dim() != mu.dim()) {
    throw InputError("build_cost_matrix: generator dimension differs from the measures'");
  }
  CostMatrix out;
  out.rows = mu.size();
  out.cols = nu.size();

  if (cost.kind() != CostSpec::Kind::Restricted) {
    fill_finite(cost, mu, nu, out.values);
    return out;
  }

  const auto& r = *cost.restricted_data();
  std::vector<double> primary;
  fill_finite(r.primary, mu, nu, primary);
  fill_finite(CostSpec::euclidean_sq(), mu, nu, out.values);

  std::vector<double> phi(out.rows), psi(out.cols);
  for (std::size_t i = 0; i < out.rows; ++i) phi[i] = r.phi.at(mu.atom(i), i);
  for (std::size_t j = 0; j < out.cols; ++j) psi[j] = r.psi.at(nu.atom(j), j);

  out.forbidden.assign(out.rows * out.cols, 0);
  bool any = false;
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) {
      const std::size_t a = i * out.cols + j;
      if (phi[i] + psi[j] < primary[a] - r.tolerance) {
        out.forbidden[a] = 1;
        out.values[a] = 0.0;
        any = true;
      }
    }
  }
  if (!any) out.forbidden.clear();
  return out;
}

CostMatrix combine_costs(const CostMatrix& a, const CostMatrix& b, double weight) {
  if (a.rows != b.rows || a.cols != b.cols) throw InputError("combine_costs: shape mismatch");
  CostMatrix out = a;
  if (b.has_forbidden()) {
    if (out.forbidden.empty()) out.forbidden.assign(out.values.size(), 0);
    for (std::size_t k = 0; k < out.values.size(); ++k) out.forbidden[k] |= b.forbidden[k];
  }
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    if (out.has_forbidden() && out.forbidden[k]) {
      out.values[k] = 0.0;
    } else {
      out.values[k] = a.values[k] + weight * b.values[k];
    }
  }
  return out;
}

}  // namespace crystal_ot
