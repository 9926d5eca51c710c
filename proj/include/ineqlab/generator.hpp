#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ineqlab/measure.hpp"

namespace ineqlab {

/// Eigendecomposition of the mu-symmetrized generator S = D^{1/2} L D^{-1/2},
/// D = diag(mu).  `rates` are the eigenvalues of -S in ascending order.
struct Spectrum {
  Eigen::VectorXd rates;
  Eigen::MatrixXd vectors;  // orthonormal columns
  Eigen::VectorXd sqrt_weights;
  std::size_t constant_mode = 0;  // column with the largest overlap with sqrt(mu)
};

/// A mu-reversible nearest-neighbour (birth-death) generator.
///
/// up(i) is the rate i -> i+1 and down(i) the rate i+1 -> i; the diagonal is
/// minus the row sum and there are no rates off the ends (reflecting
/// boundary).  The spectrum is computed on first use and shared by copies.
class GeneratorMatrix {
 public:
  /// Rates (1/dx^2) sqrt(mu_{i+1}/mu_i) and (1/dx^2) sqrt(mu_i/mu_{i+1}), a
  /// discretization of L = d^2/dx^2 - V' d/dx that is reversible for mu exactly.
  static GeneratorMatrix from_measure(const GridMeasure& mu);

  /// Arbitrary birth-death rates; throws InvalidInput unless they are
  /// nonnegative and in detailed balance with `weights` (within 1e-12 relative).
  static GeneratorMatrix from_rates(std::vector<double> weights, std::vector<double> up,
                                    std::vector<double> down);

  std::size_t size() const { return weights_.size(); }
  double up(std::size_t i) const { return up_[i]; }
  double down(std::size_t i) const { return down_[i]; }
  double diagonal(std::size_t i) const;
  std::span<const double> weights() const { return weights_; }

  /// (L g)_i.
  std::vector<double> apply(std::span<const double> g) const;

  /// E(g) = sum_i mu_i up_i (g_{i+1} - g_i)^2 = <g, -L g>_mu.
  double dirichlet_form(std::span<const double> g) const;

  Eigen::MatrixXd dense() const;
  /// Symmetric tridiagonal matrix S as a dense matrix.
  Eigen::MatrixXd symmetrized_dense() const;

  double row_sum_residual() const;
  double detailed_balance_residual() const;
  bool connected() const;

  const Spectrum& spectrum() const;

 private:
  GeneratorMatrix() = default;

  std::vector<double> weights_;
  std::vector<double> up_;
  std::vector<double> down_;
  struct Cache;
  std::shared_ptr<Cache> cache_;
};

/// P_t g = exp(tL) g for an arbitrary grid function, via the cached spectrum.
std::vector<double> semigroup_apply(const GeneratorMatrix& L, std::span<const double> g, double t);

/// P_t f for a density.  Entries in (-1e-10, 0) are clamped to zero and the
/// result renormalized; larger negative entries raise NumericalFailure.
DensityRatio evolve(const GeneratorMatrix& L, const DensityRatio& f, double t,
                    const GridMeasure& mu);

/// Poincare constant C_P = 1 / (smallest nonzero eigenvalue of -L), with the
/// constant mode deflated.  Throws DegenerateInput on a disconnected chain.
double spectral_gap(const GeneratorMatrix& L);

/// Search family for the log-Sobolev lower bound: tilts exp(s x) and localized
/// bumps floor + exp(-(x - center)^2 / (2 width^2)).
struct LsiSearch {
  std::vector<double> tilt_slopes;
  std::vector<double> bump_centers;
  std::vector<double> bump_widths;
  double bump_floor = 1e-3;

  /// Slopes on [-2, 2] and bumps across the central half of the domain.
  static LsiSearch defaults(const GridMeasure& mu);
};

/// A certified lower bound on C_LS: the largest 2 Ent(f) / I(f) over the family.
/// It is never the exact constant unless the family contains an extremal.
struct LsiEstimate {
  double lower_bound = 0.0;
  DensityRatio witness;
  std::string witness_label;
  std::size_t members_evaluated = 0;
  std::size_t members_skipped = 0;
};

LsiEstimate lsi_constant(const GridMeasure& mu, const LsiSearch& search);

/// rho = min over interior nodes of the second difference quotient of V.
/// Throws InvalidInput when n < 5.
double curvature_lower_bound(const GridMeasure& mu);

/// Wasserstein-2 distance of f mu to mu; the default backend is w2_quantile.
using W2Backend = std::function<double(const DensityRatio&, const GridMeasure&)>;

struct FlowTrace {
  std::vector<double> times;
  std::vector<double> variance;
  std::vector<double> entropy;
  std::vector<double> fisher;
  std::vector<double> w2;
  std::vector<double> sigma2;  // mu((P_t sqrt f - m)^2), m = mu(sqrt f)
  std::vector<double> lambda;  // mu((P_t sqrt f - m)^4) + 3 sigma2^2
};

/// Functionals of P_t f along `times` (increasing, starting at 0).
FlowTrace flow_trace(const GeneratorMatrix& L, const GridMeasure& mu, const DensityRatio& f,
                     std::span<const double> times, const W2Backend& backend);

}  // namespace ineqlab
