#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "ineqlab/battery.hpp"
#include "ineqlab/densities.hpp"
#include "ineqlab/errors.hpp"
#include "ineqlab/lyapunov.hpp"

using namespace ineqlab;

namespace {

GridMeasure ou(std::size_t n) { return GridMeasure::build(named_potential("ou"), {-8.0, 8.0}, n); }

LyapunovWitness witness(const GridMeasure& mu, double c, double b, const std::function<double(double)>& w) {
  LyapunovWitness out{GridFunction{std::vector<double>(mu.size())}, c, b, 0.0};
  for (std::size_t i = 0; i < mu.size(); ++i) out.w.values[i] = w(mu.node(i));
  return out;
}

double gaussian_w(double x) { return std::exp(0.25 * x * x); }

// Smallest C3 by bisection on the sign of the top eigenvalue of
// diag(mu (d^2 - C4)) - C3 * (Dirichlet form matrix), in h coordinates.
double bisection_c3(const GridMeasure& mu, const GeneratorMatrix& L, double c4) {
  const auto n = static_cast<Eigen::Index>(mu.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = mu.node(static_cast<std::size_t>(i));
    a(i, i) = mu.weight(static_cast<std::size_t>(i)) * (x * x - c4);
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double k = mu.weight(static_cast<std::size_t>(i)) * L.up(static_cast<std::size_t>(i));
    e(i, i) += k;
    e(i + 1, i + 1) += k;
    e(i, i + 1) -= k;
    e(i + 1, i) -= k;
  }
  // Rescale to unit diagonal mass so the eigenvalue sign test is well scaled.
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = 1.0 / std::sqrt(mu.weight(static_cast<std::size_t>(i)));
  a = s.asDiagonal() * a * s.asDiagonal();
  e = s.asDiagonal() * e * s.asDiagonal();
  auto feasible = [&](double c3) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a - c3 * e, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(n - 1) <= 0.0;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (!feasible(hi)) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

TEST_CASE("Gaussian Lyapunov function passes with O(dx^2) residual") {
  const GridMeasure mu = ou(1024);
  const GeneratorMatrix L = GeneratorMatrix::from_measure(mu);
  const LyapunovCheck ok = check_lyapunov(witness(mu, 0.25, 0.5, gaussian_w), L, mu);
  CHECK(ok.report.verdict == Verdict::kPass);
  CHECK(ok.violations.empty());
  // One-sided: the discrete residual is negative in the tails.
  const double worst = *std::max_element(ok.residuals.begin(), ok.residuals.end());
  CHECK(worst <= 10.0 * mu.dx() * mu.dx());
  const std::size_t mid = mu.nearest_node(2.0);
  CHECK(std::abs(ok.residuals[mid]) <= 10.0 * mu.dx() * mu.dx());
  CHECK(ok.residuals.front() == 0.0);
  CHECK(ok.residuals.back() == 0.0);
}

TEST_CASE("too large a drift rate fails for large |x|") {
  const GridMeasure mu = ou(1024);
  const GeneratorMatrix L = GeneratorMatrix::from_measure(mu);
  const LyapunovCheck bad = check_lyapunov(witness(mu, 0.3, 0.5, gaussian_w), L, mu);
  CHECK(bad.report.verdict == Verdict::kFail);
  REQUIRE_FALSE(bad.violations.empty());
  // Residual 0.05 x^2 exceeds the 10 dx^2 allowance once |x| > sqrt(200) dx.
  for (std::size_t i : bad.violations) CHECK(std::abs(mu.node(i)) > 0.9 * std::sqrt(200.0) * mu.dx());
  CHECK(bad.violations.size() > mu.size() / 2);
  // The symbolic residual is 0.05 x^2.
  const std::size_t i = mu.nearest_node(5.0);
  CHECK(bad.residuals[i] == doctest::Approx(0.05 * mu.node(i) * mu.node(i)).epsilon(1e-2));
}

TEST_CASE("constant W fails outside sqrt(b/c)") {
  const GridMeasure mu = ou(801);
  const GeneratorMatrix L = GeneratorMatrix::from_measure(mu);
  const double c = 0.5;
  const double b = 2.0;
  const LyapunovCheck r = check_lyapunov(witness(mu, c, b, [](double) { return 1.0; }), L, mu);
  CHECK(r.report.verdict == Verdict::kFail);
  for (std::size_t i = 1; i + 1 < mu.size(); ++i) {
    const bool outside = c * mu.node(i) * mu.node(i) - b > r.report.rhs;
    CHECK(outside == (std::find(r.violations.begin(), r.violations.end(), i) != r.violations.end()));
  }
  CHECK(std::abs(mu.node(r.violations.back())) > std::sqrt(b / c));
}

TEST_CASE("nonpositive W is rejected") {
  const GridMeasure mu = ou(101);
  const GeneratorMatrix L = GeneratorMatrix::from_measure(mu);
  CHECK_THROWS_AS((void)check_lyapunov(witness(mu, 0.25, 0.5, [](double x) { return x; }), L, mu), InvalidInput);
}

TEST_CASE("weighted Poincare fit") {
  const GridMeasure mu = ou(128);
  const GeneratorMatrix L = GeneratorMatrix::from_measure(mu);

  const WeightedPoincareFit big = fit_weighted_poincare(mu, L, 0.0, 64.0);
  CHECK(big.finite);
  CHECK(big.c3 == 0.0);

  const WeightedPoincareFit small = fit_weighted_poincare(mu, L, 0.0, 0.5);
  CHECK_FALSE(small.finite);
  CHECK(std::isinf(small.c3));
  CHECK(small.diagnostic.find("increase C4") != std::string::npos);

  const WeightedPoincareFit fit = fit_weighted_poincare(mu, L, 0.0, 2.0);
  REQUIRE(fit.finite);
  CHECK(fit.mean_d2 == doctest::Approx(1.0).epsilon(1e-9));
  const double oracle = bisection_c3(mu, L, 2.0);
  CHECK(std::abs(fit.c3 - oracle) <= 1e-8 * oracle);

  // The witness attains the constant.
  CHECK(std::abs(weighted_poincare_gap(fit, fit.witness, mu, L)) <= 1e-8 * L.dirichlet_form(fit.witness) * fit.c3);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> h(mu.size());
    const double a = z(rng);
    const double b = z(rng);
    const double c = z(rng);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double x = mu.node(i);
      h[i] = a + b * std::sin(c * x) + 0.3 * z(rng) + (k % 2 ? x * x * 0.1 * a : 0.0);
    }
    std::vector<double> h2(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) h2[i] = h[i] * h[i];
    const double scale = L.dirichlet_form(h) * fit.c3 + fit.c4 * mu.expectation(h2);
    CHECK(weighted_poincare_gap(fit, h, mu, L) <= 1e-9 * (1.0 + scale));
  }
}

TEST_CASE("drift condition and fit compose") {
  const GridMeasure mu = ou(256);
  const GeneratorMatrix L = GeneratorMatrix::from_measure(mu);
  const LyapunovWitness w = witness(mu, 0.25, 0.5, gaussian_w);
  REQUIRE(check_lyapunov(w, L, mu).report.verdict == Verdict::kPass);
  for (double c4 : {1.5, 2.0, 4.0}) CHECK(fit_weighted_poincare(mu, L, w.x0, c4).finite);
}

TEST_CASE("W2-information chain from the drift condition") {
  const GridMeasure mu = ou(512);
  const GeneratorMatrix L = GeneratorMatrix::from_measure(mu);
  const double cp = spectral_gap(L);
  const LyapunovWitness w = witness(mu, 0.25, 0.5, gaussian_w);

  const auto tilt = check_w2i_from_lyapunov(gaussian_tilt(0.5, mu), mu, L, w, cp, 2.0, quantile_backend(), "t");
  REQUIRE(tilt.size() == 3);
  for (const auto& r : tilt) CHECK(r.verdict == Verdict::kPass);
  CHECK(tilt[2].id == "lyapunov.w2i");
  CHECK(tilt[2].constants.at("C_7") >= 1.0);
  CHECK(std::abs(tilt[2].lhs - 0.25) < 1e-3);

  const auto flat = check_w2i_from_lyapunov(DensityRatio::constant(mu), mu, L, w, cp, 2.0, quantile_backend(), "c");
  for (const auto& r : flat) CHECK(r.verdict == Verdict::kVacuous);

  const auto mix = check_w2i_from_lyapunov(two_tilt_mixture(1.5, 0.5, mu), mu, L, w, cp, 2.0, quantile_backend(), "m");
  for (const auto& r : mix) {
    CHECK(r.verdict == Verdict::kPass);
    CHECK(r.margin > 0.0);
  }

  const LyapunovWitness bad = witness(mu, 0.3, 0.5, gaussian_w);
  CHECK_THROWS_AS((void)check_w2i_from_lyapunov(gaussian_tilt(0.5, mu), mu, L, bad, cp, 2.0, quantile_backend(), "b"),
                  InvalidInput);
  CHECK_THROWS_AS((void)check_w2i_from_lyapunov(gaussian_tilt(0.5, mu), mu, L, w, cp, 0.5, quantile_backend(), "b"),
                  InvalidInput);
}
