#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ineqlab/generator.hpp"
#include "ineqlab/measure.hpp"
#include "ineqlab/report.hpp"

namespace ineqlab {

/// W2 via w2_quantile with its default resolution.
W2Backend quantile_backend();

struct BestP {
  double p = 1.0;
  double value = 0.0;  // p^2 v^(1/p)
};

/// inf over p >= 1 of p^2 v^(1/p).  The stationary point is p = ln(v)/2, so
/// p* = max(1, ln(v)/2); a scan over [1, 20] guards the closed form.
/// Throws InvalidInput for v < 0.
BestP best_p(double v);

/// The five transport-variance bounds implied by a Poincare inequality with
/// constant c_p, with lhs W2^2(f mu, mu) from `backend`:
///   thm1.1  2 C_P sqrt(Var f) sqrt(Ent f)
///   thm1.2  2 C_P Var f
///   thm1.3  2 C_P inf_p p^2 (Var f)^(1/p)
///   thm1.4  2 C_P inf_p p^2 (C_P mu(|f'|^2))^(1/p)
///   thm1.5  2 C_P^2 mu(|f'|^2)
std::array<InequalityReport, 5> check_thm1(const DensityRatio& f, const GridMeasure& mu, double c_p,
                                           const W2Backend& backend, const std::string& context);

/// Converse direction: C_V is measured as the largest W2^2 / Var over the
/// family, then Var(h) <= sqrt(2) C_V mu(|h'|^2) is checked for each member.
std::vector<InequalityReport> check_thm1_converse(std::span<const DensityRatio> family,
                                                  std::span<const std::string> labels, const GridMeasure& mu,
                                                  const W2Backend& backend, const std::string& context);

struct InterpolationOptions {
  double step = 0.02;            // trapezoid step in t
  double tail_tolerance = 1e-5;  // bound on the neglected part of the time integral
  double t_max = 0.0;            // 0 selects the smallest horizon meeting tail_tolerance
};

/// W2^2 <= 2 sqrt(Ent f) * integral_0^inf sqrt(Ent P_t f) dt.  The integral is
/// a trapezoid sum on [0, T] plus the tail bound sqrt(Var f) C_P exp(-T/C_P),
/// which follows from Ent(P_t f) <= Var(P_t f) <= exp(-2t/C_P) Var f.
InequalityReport check_interpolation_bound(const DensityRatio& f, const GridMeasure& mu, const GeneratorMatrix& L,
                                           double c_p, const W2Backend& backend,
                                           const InterpolationOptions& options, const std::string& context);

/// |d/dt W2^2(P_t f mu, mu)| <= 2 W2(P_t f mu, mu) sqrt(I(P_t f)) at each time.
/// The derivative is a central difference at steps dt and dt/2, Richardson
/// extrapolated; the difference of the two is kept as "fd_error".  Requires
/// min f >= floor and every time > dt.
std::vector<InequalityReport> check_derivative_bound(const DensityRatio& f, const GridMeasure& mu,
                                                     const GeneratorMatrix& L, const W2Backend& backend,
                                                     std::span<const double> times, double dt, double floor,
                                                     const std::string& context);

/// Constants of the LSI-to-contraction implication under curvature rho.
struct ContractionConstants {
  double rho = 0.0;
  double c_ls = 0.0;
  double t0 = 0.0;
  double inverse_beta_t0 = 0.0;
  double beta_t0 = 0.0;
  double gamma_t0 = 0.0;
  double c = 1.0;
  double kappa = 0.0;
};

/// 1/beta(T) = rho / (1 - exp(-2 rho T)) - rho, and 1/(2T) at rho = 0.
double inverse_beta(double t, double rho);
/// gamma(T) = C_LS exp(2T / C_LS) / beta(T).
double contraction_gamma(double t, double rho, double c_ls);

/// T0 = log(1 + C_LS |rho|) / (2 |rho|) (C_LS / 2 at rho = 0),
/// C = sqrt(max{gamma(T0), exp((2/C_LS - 2 rho) T0), 1}), kappa = 1 / C_LS.
/// T0 is the minimizer of gamma for rho <= 0; for rho > 0 gamma decreases past
/// it, and C stays a valid constant because any split time gives one.
ContractionConstants contraction_constants(double rho, double c_ls);

/// W2(P_t f mu, mu) <= C exp(-kappa t) W2(f mu, mu); vacuous when W2(f mu, mu) = 0.
std::vector<InequalityReport> check_contraction(const DensityRatio& f, const GridMeasure& mu, const GeneratorMatrix& L,
                                                const W2Backend& backend, const ContractionConstants& k,
                                                std::span<const double> times, const std::string& context);

/// Inputs for the transport-entropy-information checks.  Missing entries turn
/// the dependent checks into skipped reports.
struct TransportConstants {
  std::optional<double> c_t;    // Talagrand constant
  std::optional<double> rho;    // curvature lower bound
  std::optional<double> c_p;
  std::optional<ContractionConstants> contraction;
};

/// W2-information constant 2 C^2 (1 - exp(-2 rho t)) / (kappa rho) at the
/// time where C exp(-kappa t) = 1/2.
double w2i_constant(const ContractionConstants& k);

/// Reports "talagrand", "w2i", "hwi" and "w2v.converse".
std::vector<InequalityReport> check_transport_inequalities(const DensityRatio& f, const GridMeasure& mu,
                                                           const W2Backend& backend,
                                                           const TransportConstants& constants,
                                                           const std::string& context);

/// W2^2(f mu, mu) <= C1 sigma^2 W2^2(f_c mu, mu) + C2 sigma^2 with C1 = 2,
/// C2 = 96 C_P.  With `bounded`, also the diameter form
/// W2^2 <= sigma^2 (C1 diam^2 + C2) as "thm2.bounded".  Vacuous when sigma^2
/// is below the degeneracy threshold.
std::vector<InequalityReport> check_centralization(const DensityRatio& f, const GridMeasure& mu, double c_p,
                                                   const W2Backend& backend, bool bounded,
                                                   const std::string& context, double c1 = 2.0,
                                                   double c2_over_cp = 96.0);

/// Exponential decay along a trace: decay.variance (rate 2/C_P), decay.lambda
/// (rate 3/C_P) and, when c_ls is given, decay.entropy (rate 2/max(C_LS, C_P)).
std::vector<InequalityReport> check_decay(const FlowTrace& trace, double c_p, std::optional<double> c_ls,
                                          const std::string& context);

}  // namespace ineqlab
