#include "ineqlab/hopflax.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ineqlab/errors.hpp"

namespace ineqlab {

namespace {

void require_shapes(const GridFunction& h, const GridMeasure& grid, double t) {
  if (h.size() != grid.size()) throw InvalidInput("grid function and grid sizes differ");
  if (!(t > 0.0)) throw InvalidInput(fmt::format("Hopf-Lax time must be > 0, got {}", t));
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!std::isfinite(h[i])) throw InvalidInput(fmt::format("grid function is not finite at node {}", i));
  }
}

inline double candidate(const GridFunction& h, std::span<const double> x, double inv_2t, std::size_t i,
                        std::size_t j) {
  const double d = x[i] - x[j];
  return h.values[j] + d * d * inv_2t;
}

struct DivideAndConquer {
  const GridFunction& h;
  std::span<const double> x;
  double inv_2t;
  std::vector<double>& out;

  void solve(std::size_t row_lo, std::size_t row_hi, std::size_t col_lo, std::size_t col_hi) {
    // rows [row_lo, row_hi), minimizer known to lie in [col_lo, col_hi]
    while (row_lo < row_hi) {
      const std::size_t mid = row_lo + (row_hi - row_lo) / 2;
      std::size_t arg = col_lo;
      double best = candidate(h, x, inv_2t, mid, col_lo);
      for (std::size_t j = col_lo + 1; j <= col_hi; ++j) {
        const double v = candidate(h, x, inv_2t, mid, j);
        if (v < best) {
          best = v;
          arg = j;
        }
      }
      out[mid] = best;
      solve(row_lo, mid, col_lo, arg);
      row_lo = mid + 1;
      col_lo = arg;
    }
  }
};

}  // namespace

double lipschitz_constant(const GridFunction& h, const GridMeasure& grid) {
  if (h.size() != grid.size()) throw InvalidInput("grid function and grid sizes differ");
  double lip = 0.0;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) lip = std::max(lip, std::abs(h[i + 1] - h[i]) / grid.dx());
  return lip;
}

GridFunction hopf_lax_reference(const GridFunction& h, double t, const GridMeasure& grid) {
  require_shapes(h, grid, t);
  const double inv_2t = 1.0 / (2.0 * t);
  const auto x = grid.nodes();
  GridFunction q{std::vector<double>(h.size())};
  for (std::size_t i = 0; i < h.size(); ++i) {
    double best = candidate(h, x, inv_2t, i, 0);
    for (std::size_t j = 1; j < h.size(); ++j) {
      const double v = candidate(h, x, inv_2t, i, j);
      if (v < best) best = v;
    }
    q.values[i] = best;
  }
  return q;
}

GridFunction hopf_lax(const GridFunction& h, double t, const GridMeasure& grid) {
  require_shapes(h, grid, t);
  GridFunction q{std::vector<double>(h.size())};
  DivideAndConquer dc{h, grid.nodes(), 1.0 / (2.0 * t), q.values};
  dc.solve(0, h.size(), 0, h.size() - 1);
  return q;
}

HjResidual hj_residual(const GridFunction& h, double t, double dt, const GridMeasure& grid, double kink_factor) {
  if (dt <= 0.0) dt = t / 100.0;
  const GridFunction q0 = hopf_lax(h, t, grid);
  const GridFunction q1 = hopf_lax(h, t + dt, grid);
  const double dx = grid.dx();
  HjResidual r;
  for (std::size_t i = 1; i + 1 < h.size(); ++i) {
    const double left = (q0[i] - q0[i - 1]) / dx;
    const double right = (q0[i + 1] - q0[i]) / dx;
    if (std::abs(right - left) > kink_factor * dx) {
      ++r.kinks;
      continue;
    }
    const double slope = 0.5 * (left + right);
    const double res = (q1[i] - q0[i]) / dt + 0.5 * slope * slope;
    r.residual = std::max(r.residual, std::abs(res));
    ++r.nodes_used;
  }
  return r;
}

double dual_lower_bound(const DensityRatio& f, const GridFunction& h, const GridMeasure& mu) {
  if (f.size() != mu.size()) throw InvalidInput("density and grid sizes differ");
  const GridFunction q = hopf_lax(h, 1.0, mu);
  double nu_q = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) nu_q += q[i] * f[i] * mu.weight(i);
  return 2.0 * (nu_q - mu.expectation(h.values));
}

}  // namespace ineqlab
