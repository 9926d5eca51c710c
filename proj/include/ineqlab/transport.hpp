#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ineqlab/measure.hpp"

namespace ineqlab {

/// W2(f mu, mu) on a shared grid by monotone rearrangement.
///
/// Both measures get piecewise-linear CDFs through the knots
/// F(x_i) = sum_{j<i} w_j + w_i/2; quantiles are sampled at the midpoints of
/// `quantile_points` equal cells of (0, 1) (0 selects 8n) and the squared
/// quantile gap is averaged.  Flat CDF stretches resolve to the lower quantile.
double w2_quantile(const DensityRatio& nu, const GridMeasure& mu, std::size_t quantile_points = 0);

/// Same, for two arbitrary weight vectors on the nodes of `grid`.
double w2_quantile(const GridMeasure& grid, std::span<const double> a, std::span<const double> b,
                   std::size_t quantile_points = 0);

/// A probability vector on an abstract finite metric space.
struct FiniteMetricMeasure {
  Eigen::MatrixXd dist;
  std::vector<double> weights;

  /// Checks symmetry, zero diagonal, nonnegativity, unit mass and the triangle
  /// inequality (all triples for n <= 64, a deterministic sample above).
  void validate(double tolerance = 1e-12) const;

  /// Points of the real line with d(x, y) = |x - y|.
  static FiniteMetricMeasure on_line(std::span<const double> points, std::vector<double> weights);
};

struct TransportPlan {
  Eigen::MatrixXd coupling;
  std::vector<double> source;
  std::vector<double> target;

  double max_marginal_error() const;
  double cost(const Eigen::MatrixXd& cost_matrix) const;
};

struct LpOptions {
  std::size_t size_cap = 500;  // per side
  std::size_t max_pivots = 0;  // 0 selects 50 (n + m)^2
};

/// Exact optimum of the transport LP with cost d^p.
struct LpSolution {
  double cost = 0.0;      // W_p^p
  double distance = 0.0;  // W_p
  TransportPlan plan;
  // phi_i + psi_j <= d_ij^p everywhere, with equality on the basis.  psi is
  // shifted to have zero mean under the target weights.
  std::vector<double> source_potential;
  std::vector<double> target_potential;
  double duality_gap = 0.0;
  std::size_t pivots = 0;
};

/// Transportation simplex (north-west corner start, Dantzig pricing, tree
/// potentials).  Source and target must share the distance matrix.  Throws
/// InvalidInput past the size cap or when the total masses differ.
LpSolution w2_lp(const FiniteMetricMeasure& source, const FiniteMetricMeasure& target, double p = 2.0,
                 const LpOptions& options = {});

struct SinkhornOptions {
  double epsilon = 1e-2;
  double tolerance = 1e-6;  // L1 error of both marginals
  // Relaxed potential updates f <- (1 - w) f + w f_sinkhorn.  1 is plain
  // Sinkhorn; 0 measures the plain rate eta over the first iterations and
  // switches to w = 2 / (1 + sqrt(1 - eta)).  Relaxed runs fall back to plain
  // Sinkhorn for good if the marginal error stops improving.
  double overrelaxation = 0.0;
  std::size_t max_iterations = 200000;
};

/// Entropic transport with quadratic cost, bracketed on both sides.
struct SinkhornResult {
  double upper = 0.0;  // cost of the rounded feasible plan, >= W2^2
  double lower = 0.0;  // dual value of the c-transformed potentials, <= W2^2
  double w2 = 0.0;     // sqrt(upper)
  TransportPlan plan;  // rounded, exactly feasible up to round-off
  std::size_t iterations = 0;
  double marginal_error = 0.0;
};

/// Log-domain Sinkhorn.  Throws NumericalFailure carrying the last marginal
/// error if it does not reach the tolerance.
SinkhornResult sinkhorn(const FiniteMetricMeasure& source, const FiniteMetricMeasure& target,
                        const SinkhornOptions& options = {});

/// The grid viewed as a finite metric space carrying the masses f_i mu_i.
FiniteMetricMeasure atomize(const DensityRatio& f, const GridMeasure& mu);

}  // namespace ineqlab
