#include "ineqlab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "ineqlab/errors.hpp"

namespace ineqlab {

namespace {

std::vector<double> squared_distances(const GridMeasure& mu, double x0) {
  std::vector<double> d2(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) d2[i] = (mu.node(i) - x0) * (mu.node(i) - x0);
  return d2;
}

}  // namespace

LyapunovCheck check_lyapunov(const LyapunovWitness& witness, const GeneratorMatrix& L, const GridMeasure& mu,
                             double tolerance_factor) {
  const std::size_t n = mu.size();
  if (witness.w.size() != n || L.size() != n) throw InvalidInput("witness, generator and grid sizes differ");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(witness.w[i] > 0.0) || !std::isfinite(witness.w[i])) {
      throw InvalidInput(fmt::format("Lyapunov function must be positive and finite; W = {} at node {}",
                                     witness.w[i], i));
    }
  }
  const std::vector<double> lw = L.apply(witness.w.values);
  const double tol = tolerance_factor * mu.dx() * mu.dx();

  LyapunovCheck out;
  out.residuals.assign(n, 0.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double d = mu.node(i) - witness.x0;
    const double r = lw[i] / witness.w[i] - (-witness.c * d * d + witness.b);
    out.residuals[i] = r;
    worst = std::max(worst, r);
    if (r > tol) out.violations.push_back(i);
  }
  out.report = make_report("lyapunov.drift", "", worst, tol, 0.0,
                           {{"c", witness.c}, {"b", witness.b}, {"x0", witness.x0},
                            {"violations", static_cast<double>(out.violations.size())}});
  if (!out.violations.empty()) {
    out.report.note = fmt::format("{} interior nodes violate the drift condition, first at x = {}",
                                  out.violations.size(), mu.node(out.violations.front()));
  }
  return out;
}

WeightedPoincareFit fit_weighted_poincare(const GridMeasure& mu, const GeneratorMatrix& L, double x0, double c4) {
  if (!(c4 >= 0.0)) throw InvalidInput(fmt::format("C4 must be >= 0, got {}", c4));
  const std::size_t n = mu.size();
  if (L.size() != n) throw InvalidInput("generator and grid sizes differ");
  const std::vector<double> d2 = squared_distances(mu, x0);

  WeightedPoincareFit fit;
  fit.c4 = c4;
  fit.mean_d2 = mu.expectation(d2);
  fit.x0 = x0;

  // Coordinates y = sqrt(mu) h turn both forms into plain quadratic forms;
  // the kernel of the Dirichlet form is s = sqrt(mu).
  Eigen::VectorXd s(n);
  Eigen::VectorXd a(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::sqrt(mu.weight(i));
    a[i] = d2[i] - c4;
  }
  s.normalize();
  const double a11 = s.cwiseProduct(a).dot(s);
  if (a11 >= 0.0) {
    fit.c3 = std::numeric_limits<double>::infinity();
    fit.diagnostic = fmt::format("increase C4: mu(d^2) = {} is not below C4 = {}", fit.mean_d2, c4);
    return fit;
  }
  if (*std::max_element(a.data(), a.data() + n) <= 0.0) {
    // Pointwise domination.
    fit.finite = true;
    fit.c3 = 0.0;
    return fit;
  }

  // Householder reflection sending e_0 to s; its other columns span s^perp.
  Eigen::VectorXd v = s;
  v[0] -= 1.0;
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(n, n);
  if (v.norm() > 1e-300) {
    v.normalize();
    u -= 2.0 * v * v.transpose();
  }
  const Eigen::MatrixXd comp = u.rightCols(n - 1);
  const Eigen::MatrixXd a_comp = comp.transpose() * a.asDiagonal() * comp;
  const Eigen::VectorXd cross = comp.transpose() * a.cwiseProduct(s);
  // Maximizing over the kernel component adds b b^T / |a11|.
  const Eigen::MatrixXd lhs = a_comp + cross * cross.transpose() / (-a11);
  const Eigen::MatrixXd rhs = -(comp.transpose() * L.symmetrized_dense() * comp);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(lhs, rhs);
  if (solver.info() != Eigen::Success) throw NumericalFailure("generalized eigensolver failed in the weighted Poincare fit");
  const Eigen::Index top = n - 2;
  fit.c3 = std::max(0.0, solver.eigenvalues()[top]);
  fit.finite = true;

  const Eigen::VectorXd g = solver.eigenvectors().col(top);
  const Eigen::VectorXd y = comp * g - (cross.dot(g) / a11) * s;
  fit.witness.resize(n);
  for (std::size_t i = 0; i < n; ++i) fit.witness[i] = y[i] / std::sqrt(mu.weight(i));
  return fit;
}

double weighted_poincare_gap(const WeightedPoincareFit& fit, std::span<const double> h, const GridMeasure& mu,
                             const GeneratorMatrix& L) {
  if (h.size() != mu.size()) throw InvalidInput("test function and grid sizes differ");
  const std::vector<double> d2 = squared_distances(mu, fit.x0);
  double weighted = 0.0;
  double plain = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    weighted += d2[i] * h[i] * h[i] * mu.weight(i);
    plain += h[i] * h[i] * mu.weight(i);
  }
  return weighted - fit.c3 * L.dirichlet_form(h) - fit.c4 * plain;
}

std::vector<InequalityReport> check_w2i_from_lyapunov(const DensityRatio& f, const GridMeasure& mu,
                                                      const GeneratorMatrix& L, const LyapunovWitness& witness,
                                                      double c_p, double c4, const W2Backend& backend,
                                                      const std::string& context) {
  const LyapunovCheck drift = check_lyapunov(witness, L, mu);
  if (drift.report.verdict != Verdict::kPass) {
    throw InvalidInput("Lyapunov witness fails the drift condition: " + drift.report.note);
  }
  const WeightedPoincareFit fit = fit_weighted_poincare(mu, L, witness.x0, c4);
  if (!fit.finite) throw InvalidInput(fit.diagnostic);
  return check_w2i_from_fit(f, mu, L, fit, c_p, backend, context);
}

std::vector<InequalityReport> check_w2i_from_fit(const DensityRatio& f, const GridMeasure& mu,
                                                 const GeneratorMatrix& L, const WeightedPoincareFit& fit,
                                                 double c_p, const W2Backend& backend, const std::string& context) {
  if (!fit.finite) throw InvalidInput(fit.diagnostic);
  const double c4 = fit.c4;

  constexpr double c1 = 2.0;
  const double c2 = 96.0 * c_p;
  const double c7 = 0.5 * c1 * fit.c3 + 0.25 * c_p * (2.0 * c1 * (c4 + fit.mean_d2) + c2);
  std::map<std::string, double> constants{{"C_1", c1}, {"C_2", c2},  {"C_3", fit.c3},       {"C_4", c4},
                                          {"C_7", c7}, {"C_P", c_p}, {"mu_d2", fit.mean_d2}};

  Centering cen;
  try {
    cen = sqrt_centering(f, mu);
  } catch (const DegenerateInput& e) {
    return {vacuous_report("lyapunov.centralized", context, e.what(), constants),
            vacuous_report("lyapunov.poincare", context, e.what(), constants),
            vacuous_report("lyapunov.w2i", context, e.what(), constants)};
  }

  std::vector<double> h(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) h[i] = std::sqrt(f[i]) - cen.c;
  const std::vector<double> d2 = squared_distances(mu, fit.x0);
  double weighted = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) weighted += d2[i] * h[i] * h[i] * mu.weight(i);
  const double energy = L.dirichlet_form(h);

  const double w2 = backend(f, mu);
  const double w2sq = w2 * w2;
  const double fisher = functionals(f, mu).fisher;
  constants["sigma2"] = cen.sigma2;

  std::vector<InequalityReport> out;
  const double rhs1 = 2.0 * c1 * (weighted + fit.mean_d2 * cen.sigma2) + c2 * cen.sigma2;
  out.push_back(make_report("lyapunov.centralized", context, w2sq, rhs1, w2_tolerance(mu.dx(), w2sq, rhs1), constants));
  const double rhs2 = fit.c3 * energy + c4 * cen.sigma2;
  out.push_back(make_report("lyapunov.poincare", context, weighted, rhs2, kAbsoluteTolerance, constants));
  const double rhs3 = c7 * fisher;
  out.push_back(make_report("lyapunov.w2i", context, w2sq, rhs3, w2_tolerance(mu.dx(), w2sq, rhs3), constants));
  return out;
}

}  // namespace ineqlab
