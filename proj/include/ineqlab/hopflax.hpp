#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ineqlab/measure.hpp"

namespace ineqlab {

/// Real values on the nodes of a grid.
struct GridFunction {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Largest slope between adjacent nodes; a Lipschitz constant on the grid.
double lipschitz_constant(const GridFunction& h, const GridMeasure& grid);

/// Infimum convolution Q_t h(x_i) = min_j { h_j + |x_i - x_j|^2 / (2t) } over
/// the grid nodes, leftmost minimizer on ties.  Throws InvalidInput for t <= 0.
///
/// The minimizer index is nondecreasing in i (the quadratic cost is Monge),
/// so rows are solved by divide and conquer over shrinking column ranges; the
/// candidate values are formed exactly as in hopf_lax_reference.
GridFunction hopf_lax(const GridFunction& h, double t, const GridMeasure& grid);

/// Exhaustive O(n^2) minimization.
GridFunction hopf_lax_reference(const GridFunction& h, double t, const GridMeasure& grid);

struct HjResidual {
  double residual = 0.0;     // max |(Q_{t+dt} - Q_t)/dt + |grad Q_t|^2 / 2| on smooth interior nodes
  std::size_t nodes_used = 0;
  std::size_t kinks = 0;     // interior nodes excluded as kinks
};

/// Residual of the Hamilton-Jacobi equation along the Hopf-Lax flow.  A node is
/// a kink when its one-sided slopes differ by more than kink_factor * dx.
/// dt <= 0 selects t / 100.
HjResidual hj_residual(const GridFunction& h, double t, double dt, const GridMeasure& grid,
                       double kink_factor = 10.0);

/// 2 (integral of Q_1 h d nu - integral of h d mu), a lower bound on W2^2(f mu, mu).
double dual_lower_bound(const DensityRatio& f, const GridFunction& h, const GridMeasure& mu);

}  // namespace ineqlab
