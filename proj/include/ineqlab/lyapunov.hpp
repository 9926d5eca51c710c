#pragma once

#include <string>
#include <vector>

#include "ineqlab/generator.hpp"
#include "ineqlab/hopflax.hpp"
#include "ineqlab/measure.hpp"
#include "ineqlab/report.hpp"

namespace ineqlab {

/// A candidate for LW <= (-c d^2(x, x0) + b) W.
struct LyapunovWitness {
  GridFunction w;
  double c = 0.0;
  double b = 0.0;
  double x0 = 0.0;
};

struct LyapunovCheck {
  InequalityReport report;              // lhs = max relative residual, rhs = tolerance
  std::vector<std::size_t> violations;  // interior nodes above tolerance
  std::vector<double> residuals;        // ((LW)_i - (-c d_i^2 + b) W_i) / W_i, 0 at the ends
};

/// Evaluates the drift condition on interior nodes.  Residuals are divided by
/// W_i so the growth of W does not hide a violation.  The check passes when
/// the largest residual is at most tolerance_factor * dx^2.
/// Throws InvalidInput when W is not strictly positive and finite, or when the
/// sizes disagree.
LyapunovCheck check_lyapunov(const LyapunovWitness& witness, const GeneratorMatrix& L, const GridMeasure& mu,
                             double tolerance_factor = 10.0);

/// Result of fitting mu(d^2 h^2) <= C3 E(h) + C4 mu(h^2).
struct WeightedPoincareFit {
  double c3 = 0.0;
  double c4 = 0.0;
  bool finite = false;
  std::vector<double> witness;  // extremal h; empty when C3 is infinite
  std::string diagnostic;
  double mean_d2 = 0.0;  // mu(d^2(x0, .))
  double x0 = 0.0;
};

/// Smallest C3 for a fixed C4 >= 0, with E the Dirichlet form of L.  C3 is
/// infinite when constants violate the inequality (mu(d^2) >= C4); the
/// diagnostic then asks for a larger C4.
WeightedPoincareFit fit_weighted_poincare(const GridMeasure& mu, const GeneratorMatrix& L, double x0, double c4);

/// mu(d^2 h^2) - C3 E(h) - C4 mu(h^2); nonpositive when h satisfies the fit.
double weighted_poincare_gap(const WeightedPoincareFit& fit, std::span<const double> h, const GridMeasure& mu,
                             const GeneratorMatrix& L);

/// The chain from a drift condition to W2^2 <= C7 I(f), with h = sqrt f - mu(sqrt f):
///   lyapunov.centralized  W2^2 <= 2 C1 (mu(d^2 h^2) + mu(d^2) sigma^2) + C2 sigma^2
///   lyapunov.poincare     mu(d^2 h^2) <= C3 E(h) + C4 sigma^2
///   lyapunov.w2i          W2^2 <= C7 I(f),
///                         C7 = C1 C3 / 2 + C_P (2 C1 (C4 + mu(d^2)) + C2) / 4
/// with C1 = 2 and C2 = 96 C_P.  All three are vacuous when sigma^2 is
/// degenerate.  Throws InvalidInput if the witness fails check_lyapunov or the
/// fit is infinite.
std::vector<InequalityReport> check_w2i_from_lyapunov(const DensityRatio& f, const GridMeasure& mu,
                                                      const GeneratorMatrix& L, const LyapunovWitness& witness,
                                                      double c_p, double c4, const W2Backend& backend,
                                                      const std::string& context);

/// Same chain with a fit already in hand (the drift check is the caller's).
std::vector<InequalityReport> check_w2i_from_fit(const DensityRatio& f, const GridMeasure& mu,
                                                 const GeneratorMatrix& L, const WeightedPoincareFit& fit,
                                                 double c_p, const W2Backend& backend, const std::string& context);

}  // namespace ineqlab
