#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ineqlab/densities.hpp"
#include "ineqlab/errors.hpp"
#include "ineqlab/measure.hpp"

using namespace ineqlab;

namespace {

GridMeasure ou(std::size_t n = 1024) { return GridMeasure::build(named_potential("ou"), {-8.0, 8.0}, n); }

double total(std::span<const double> w) { return std::accumulate(w.begin(), w.end(), 0.0); }

}  // namespace

TEST_CASE("standard Gaussian grid is normalized") {
  const GridMeasure mu = ou();
  CHECK(mu.size() == 1024);
  CHECK(std::abs(total(mu.weights()) - 1.0) < 1e-12);
  CHECK(mu.dx() == doctest::Approx(16.0 / 1023.0));
  for (double w : mu.weights()) CHECK(w > 0.0);
}

TEST_CASE("uniform potential gives uniform weights") {
  const GridMeasure mu = GridMeasure::build(named_potential("uniform"), {0.0, 1.0}, 11);
  for (double w : mu.weights()) CHECK(w == doctest::Approx(1.0 / 11.0).epsilon(1e-14));
}

TEST_CASE("weights match a fine quadrature of exp(-V)") {
  const Potential v = [](double x) { return x * x * x * x - x * x; };
  const GridMeasure mu = GridMeasure::build(v, {-4.0, 4.0}, 512);
  // Normalizer by trapezoid at 16384 nodes.
  const std::size_t fine = 16384;
  const double h = 8.0 / static_cast<double>(fine - 1);
  double z = 0.0;
  for (std::size_t i = 0; i < fine; ++i) {
    const double x = -4.0 + h * static_cast<double>(i);
    z += (i == 0 || i + 1 == fine ? 0.5 : 1.0) * std::exp(-v(x));
  }
  z *= h;
  double worst = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double expected = std::exp(-v(mu.node(i))) * mu.dx() / z;
    worst = std::max(worst, std::abs(mu.weight(i) - expected) / expected);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("build rejects bad input") {
  CHECK_THROWS_AS(GridMeasure::build(named_potential("ou"), {0.0, 1.0}, 2), InvalidInput);
  CHECK_THROWS_AS(GridMeasure::build(named_potential("ou"), {1.0, 0.0}, 10), InvalidInput);
  CHECK_THROWS_AS(GridMeasure::build([](double x) { return x > 0.5 ? NAN : 0.0; }, {0.0, 1.0}, 10), InvalidInput);
}

TEST_CASE("truncation tail") {
  const Potential v = named_potential("ou");
  CHECK(truncation_tail_mass(v, {-8.0, 8.0}, 1024) < 1e-12);
  CHECK(truncation_tail_mass(v, {-2.0, 2.0}, 256) > 1e-2);
  CHECK_THROWS_AS(check_truncation(v, {-2.0, 2.0}, 256), InvalidInput);
  const Domain d = symmetric_domain_for_tail(v);
  // P(|Z| > R) < 1e-12 needs R > 7.13.
  CHECK(d.hi > 7.0);
  CHECK(d.hi < 7.5);
  CHECK(d.lo == -d.hi);
}

TEST_CASE("constant density has zero functionals") {
  const GridMeasure mu = ou();
  const FunctionalBundle b = functionals(DensityRatio::constant(mu), mu);
  CHECK(b.variance == doctest::Approx(0.0));
  CHECK(std::abs(b.entropy) < 1e-14);
  CHECK(b.fisher == 0.0);
  CHECK(b.dirichlet == 0.0);
  CHECK_THROWS_AS((void)sqrt_centering(DensityRatio::constant(mu), mu), DegenerateInput);
}

TEST_CASE("Gaussian tilt closed forms") {
  const GridMeasure mu = ou();
  const double m = 0.5;
  const FunctionalBundle b = functionals(gaussian_tilt(m, mu), mu);
  CHECK(b.variance == doctest::Approx(std::exp(m * m) - 1.0).epsilon(1e-3));
  CHECK(std::abs(b.variance - 0.28403) < 1e-3);
  CHECK(std::abs(b.entropy - 0.125) < 1e-3);
  CHECK(std::abs(b.fisher - 0.25) < 1e-3);
  CHECK(std::abs(b.dirichlet - 0.32101) < 1e-3);
  CHECK_FALSE(b.fisher_infinite);

  const FunctionalBundle r = functionals(gaussian_tilt(-m, mu), mu);
  CHECK(r.variance == doctest::Approx(b.variance).epsilon(1e-12));
  CHECK(r.entropy == doctest::Approx(b.entropy).epsilon(1e-12));
  CHECK(r.fisher == doctest::Approx(b.fisher).epsilon(1e-12));
  CHECK(r.dirichlet == doctest::Approx(b.dirichlet).epsilon(1e-12));

  const DensityRatio one = gaussian_tilt(0.0, mu);
  for (std::size_t i = 0; i < mu.size(); ++i) CHECK(one[i] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gaussian_tilt insists on the Gaussian model") {
  const GridMeasure dw = GridMeasure::build(named_potential("double_well"), {-2.6, 2.6}, 256);
  CHECK_THROWS_AS((void)gaussian_tilt(0.5, dw), InvalidInput);
  CHECK_NOTHROW((void)exponential_tilt(0.5, dw));
  // A steep tilt concentrates at the right end but stays a probability density.
  const GridMeasure mu = ou();
  const DensityRatio steep = exponential_tilt(200.0, mu);
  CHECK(mu.expectation(steep.values()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(steep[mu.size() - 1] > steep[mu.size() - 2]);
}

TEST_CASE("square-root centering of a Gaussian tilt") {
  const GridMeasure mu = ou();
  const Centering c = sqrt_centering(gaussian_tilt(1.0, mu), mu);
  CHECK(std::abs(c.c - 0.88250) < 1e-3);
  CHECK(std::abs(c.sigma2 - 0.22120) < 1e-3);
  CHECK(std::abs(mu.expectation(c.f_c.values()) - 1.0) < 1e-10);
  CHECK(std::abs(c.c * c.c + c.sigma2 - 1.0) < 1e-10);
}

TEST_CASE("two-node toy measure") {
  const GridMeasure mu = GridMeasure::from_weights({0.5, 0.5}, {0.0, 1.0});
  const DensityRatio f = DensityRatio::checked({1.5, 0.5}, mu);
  CHECK(variance(f.values(), mu) == doctest::Approx(0.25).epsilon(1e-15));
  const Centering c = sqrt_centering(f, mu);
  const double expected_c = 0.5 * (std::sqrt(1.5) + std::sqrt(0.5));
  CHECK(c.c == doctest::Approx(expected_c).epsilon(1e-15));
  CHECK(c.sigma2 == doctest::Approx(1.0 - expected_c * expected_c).epsilon(1e-12));
  CHECK(std::abs(mu.expectation(c.f_c.values()) - 1.0) < 1e-12);
}

TEST_CASE("density validation") {
  const GridMeasure mu = GridMeasure::from_weights({0.5, 0.5}, {0.0, 1.0});
  CHECK_THROWS_AS((void)DensityRatio::checked({1.5, 0.4}, mu), InvalidInput);
  CHECK_THROWS_AS((void)DensityRatio::checked({2.5, -0.5}, mu), InvalidInput);
  CHECK_THROWS_AS((void)DensityRatio::normalized({0.0, 0.0}, mu), InvalidInput);
}

TEST_CASE("zero conventions for entropy and Fisher information") {
  const GridMeasure mu = GridMeasure::build(named_potential("uniform"), {0.0, 1.0}, 5);
  // Zero on a flat stretch: finite Fisher information.
  const FunctionalBundle flat = functionals(DensityRatio::normalized({0.0, 0.0, 0.0, 1.0, 1.0}, mu), mu);
  CHECK(std::isfinite(flat.entropy));
  CHECK(flat.entropy == doctest::Approx(std::log(2.5)));
  // Zero where the central difference is nonzero: infinite.
  const FunctionalBundle kink = functionals(DensityRatio::normalized({1.0, 0.0, 0.5, 1.0, 1.0}, mu), mu);
  CHECK(kink.fisher_infinite);
  CHECK(std::isinf(kink.fisher));
  CHECK_THROWS_AS((void)entropy(std::vector<double>{1.0, -1.0, 1.0, 1.0, 1.0}, mu), InvalidInput);
}

TEST_CASE("entropy is dominated by the variance bounds") {
  for (const char* model : {"ou", "double_well"}) {
    const GridMeasure mu = std::string(model) == "ou"
                               ? ou(512)
                               : GridMeasure::build(named_potential(model), {-2.6, 2.6}, 512);
    DensityFamilySpec spec;
    spec.include_constant = true;
    for (const auto& d : density_family(spec, 11, mu)) {
      const FunctionalBundle b = functionals(d.f, mu);
      INFO(model << " " << d.label);
      CHECK(b.variance >= 0.0);
      CHECK(b.entropy >= -1e-15);
      CHECK(b.fisher >= 0.0);
      CHECK(b.dirichlet >= 0.0);
      CHECK(b.entropy <= b.variance + 1e-14);
      for (double p : {1.0, 1.5, 2.0, 3.0}) CHECK(b.entropy <= p * std::pow(b.variance, 1.0 / p) + 1e-14);
    }
  }
}

TEST_CASE("functionals converge at second order under refinement") {
  auto bundle = [](std::size_t n) {
    const GridMeasure mu = GridMeasure::build(named_potential("ou"), {-8.0, 8.0}, n);
    return functionals(two_tilt_mixture(1.0, 0.3, mu), mu);
  };
  const FunctionalBundle a = bundle(257);
  const FunctionalBundle b = bundle(513);
  const FunctionalBundle c = bundle(1025);
  auto ratio = [](double x, double y, double z) { return std::abs(x - y) / std::abs(y - z); };
  // Halving dx should cut the difference by about 4.
  CHECK(ratio(a.fisher, b.fisher, c.fisher) == doctest::Approx(4.0).epsilon(0.1));
  CHECK(ratio(a.dirichlet, b.dirichlet, c.dirichlet) == doctest::Approx(4.0).epsilon(0.1));
  CHECK(std::abs(b.variance - c.variance) < 1e-6);
  CHECK(std::abs(b.entropy - c.entropy) < 1e-6);
}

TEST_CASE("family construction is reproducible") {
  const GridMeasure mu = ou(256);
  const auto a = density_family({}, 42, mu);
  const auto b = density_family({}, 42, mu);
  const auto c = density_family({}, 43, mu);
  REQUIRE(a.size() == 20);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].label == b[k].label);
    CHECK(std::equal(a[k].f.values().begin(), a[k].f.values().end(), b[k].f.values().begin()));
    CHECK(std::abs(mu.expectation(a[k].f.values()) - 1.0) < 1e-12);
  }
  CHECK(a.back().f[10] != c.back().f[10]);
}
