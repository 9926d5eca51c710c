#include "ineqlab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "ineqlab/errors.hpp"

namespace ineqlab {

namespace {

std::vector<double> equispaced(Domain domain, std::size_t n) {
  std::vector<double> x(n);
  const double dx = (domain.hi - domain.lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = domain.lo + dx * static_cast<double>(i);
  x.back() = domain.hi;
  return x;
}

// Kahan-compensated sum; grid sums of 1e3-1e5 terms feed 1e-12 invariants.
template <typename F>
double compensated_sum(std::size_t n, F&& term) {
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = term(i) - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace

void GridMeasure::validate_domain(Domain domain, std::size_t n, std::size_t min_n) {
  if (n < min_n) throw InvalidInput(fmt::format("grid needs at least {} nodes, got {}", min_n, n));
  if (!(domain.hi > domain.lo) || !std::isfinite(domain.lo) || !std::isfinite(domain.hi)) {
    throw InvalidInput(fmt::format("invalid domain [{}, {}]", domain.lo, domain.hi));
  }
}

GridMeasure GridMeasure::build(const Potential& potential, Domain domain, std::size_t n) {
  validate_domain(domain, n, 3);
  const std::vector<double> x = equispaced(domain, n);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = potential(x[i]);
  return from_potential(std::move(v), domain);
}

GridMeasure GridMeasure::from_potential(std::vector<double> potential, Domain domain) {
  const std::size_t n = potential.size();
  validate_domain(domain, n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(potential[i])) {
      throw InvalidInput(fmt::format("potential is not finite at node {}", i));
    }
  }
  GridMeasure mu;
  mu.nodes_ = equispaced(domain, n);
  mu.dx_ = (domain.hi - domain.lo) / static_cast<double>(n - 1);
  const double vmin = *std::min_element(potential.begin(), potential.end());
  mu.weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i) mu.weights_[i] = std::exp(-(potential[i] - vmin));
  const double total = compensated_sum(n, [&](std::size_t i) { return mu.weights_[i]; });
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidInput("measure has zero total mass");
  for (std::size_t i = 0; i < n; ++i) {
    mu.weights_[i] /= total;
    if (!(mu.weights_[i] > 0.0)) {
      throw InvalidInput(fmt::format("weight underflows to zero at node {}; shrink the domain", i));
    }
  }
  mu.potential_ = std::move(potential);
  return mu;
}

GridMeasure GridMeasure::from_weights(std::vector<double> weights, Domain domain) {
  const std::size_t n = weights.size();
  validate_domain(domain, n, 2);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw InvalidInput(fmt::format("weight at node {} must be positive and finite", i));
    }
    total += weights[i];
  }
  GridMeasure mu;
  mu.nodes_ = equispaced(domain, n);
  mu.dx_ = (domain.hi - domain.lo) / static_cast<double>(n - 1);
  mu.weights_ = std::move(weights);
  mu.potential_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu.weights_[i] /= total;
    mu.potential_[i] = -std::log(mu.weights_[i]);
  }
  return mu;
}

double GridMeasure::expectation(std::span<const double> g) const {
  if (g.size() != size()) throw InvalidInput("function and measure sizes differ");
  return compensated_sum(size(), [&](std::size_t i) { return g[i] * weights_[i]; });
}

std::size_t GridMeasure::nearest_node(double x) const {
  const double pos = (x - nodes_.front()) / dx_;
  if (pos <= 0.0) return 0;
  const auto i = static_cast<std::size_t>(std::floor(pos + 0.5));
  return std::min(i, size() - 1);
}

double truncation_tail_mass(const Potential& potential, Domain domain, std::size_t n) {
  if (n < 3) throw InvalidInput("grid needs at least 3 nodes");
  const double width = domain.hi - domain.lo;
  const double dx = width / static_cast<double>(n - 1);
  const std::size_t pad = n / 2 + 1;
  const Domain wide{domain.lo - dx * static_cast<double>(pad),
                    domain.hi + dx * static_cast<double>(pad)};
  const GridMeasure big = GridMeasure::build(potential, wide, n + 2 * pad);
  double outside = 0.0;
  for (std::size_t i = 0; i < pad; ++i) outside += big.weight(i) + big.weight(big.size() - 1 - i);
  return outside;
}

void check_truncation(const Potential& potential, Domain domain, std::size_t n, double tolerance) {
  const double tail = truncation_tail_mass(potential, domain, n);
  if (tail > tolerance) {
    throw InvalidInput(fmt::format("truncated tail mass {:.3e} exceeds tolerance {:.3e} on [{}, {}]",
                                   tail, tolerance, domain.lo, domain.hi));
  }
}

Domain symmetric_domain_for_tail(const Potential& potential, double tolerance, double max_radius) {
  constexpr std::size_t kProbeNodes = 513;
  for (double r = 0.125; r <= max_radius; r += 0.125) {
    // Tail mass relative to the mass inside [-r, r], estimated on [-2r, 2r]
    // at the same spacing; beyond that the potential is assumed to keep growing.
    try {
      if (truncation_tail_mass(potential, {-r, r}, kProbeNodes) < tolerance) return {-r, r};
    } catch (const InvalidInput&) {
      // Underflow on the doubled domain means the tail is far below tolerance.
      return {-r, r};
    }
  }
  throw InvalidInput(fmt::format("no radius up to {} brings the tail below {:.1e}", max_radius, tolerance));
}

DensityRatio DensityRatio::checked(std::vector<double> values, const GridMeasure& mu) {
  if (values.size() != mu.size()) throw InvalidInput("density and measure sizes differ");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw InvalidInput(fmt::format("density is negative or not finite at node {}", i));
    }
  }
  const double total = mu.expectation(values);
  if (std::abs(total - 1.0) > 1e-10) {
    throw InvalidInput(fmt::format("density is not normalized: mu(f) = {:.17g}", total));
  }
  return DensityRatio(std::move(values));
}

DensityRatio DensityRatio::normalized(std::vector<double> values, const GridMeasure& mu) {
  if (values.size() != mu.size()) throw InvalidInput("density and measure sizes differ");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw InvalidInput(fmt::format("density is negative or not finite at node {}", i));
    }
  }
  const double total = mu.expectation(values);
  if (!(total > 0.0)) throw InvalidInput("density has zero mass");
  for (double& v : values) v /= total;
  return DensityRatio(std::move(values));
}

DensityRatio DensityRatio::constant(const GridMeasure& mu) {
  return DensityRatio(std::vector<double>(mu.size(), 1.0));
}

std::vector<double> DensityRatio::masses(const GridMeasure& mu) const {
  std::vector<double> m(size());
  for (std::size_t i = 0; i < size(); ++i) m[i] = values_[i] * mu.weight(i);
  return m;
}

std::vector<double> gradient(std::span<const double> g, const GridMeasure& mu) {
  const std::size_t n = g.size();
  if (n != mu.size()) throw InvalidInput("function and measure sizes differ");
  const double dx = mu.dx();
  std::vector<double> d(n);
  d[0] = (g[1] - g[0]) / dx;
  d[n - 1] = (g[n - 1] - g[n - 2]) / dx;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (g[i + 1] - g[i - 1]) / (2.0 * dx);
  return d;
}

double mean(std::span<const double> g, const GridMeasure& mu) { return mu.expectation(g); }

double variance(std::span<const double> g, const GridMeasure& mu) {
  const double m = mu.expectation(g);
  // Centered form avoids cancellation in mu(g^2) - mu(g)^2.
  const double v = compensated_sum(g.size(), [&](std::size_t i) {
    const double c = g[i] - m;
    return c * c * mu.weight(i);
  });
  return std::max(v, 0.0);
}

double entropy(std::span<const double> g, const GridMeasure& mu) {
  const double m = mu.expectation(g);
  if (!(m > 0.0)) return 0.0;
  const double e = compensated_sum(g.size(), [&](std::size_t i) {
    if (g[i] < 0.0) throw InvalidInput(fmt::format("entropy of a negative function at node {}", i));
    return g[i] > 0.0 ? g[i] * std::log(g[i] / m) * mu.weight(i) : 0.0;
  });
  return std::max(e, 0.0);
}

double dirichlet_energy(std::span<const double> g, const GridMeasure& mu) {
  const std::vector<double> d = gradient(g, mu);
  return compensated_sum(g.size(), [&](std::size_t i) { return d[i] * d[i] * mu.weight(i); });
}

FunctionalBundle functionals(const DensityRatio& f, const GridMeasure& mu) {
  const auto v = f.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) throw InvalidInput(fmt::format("density is negative at node {}", i));
  }
  FunctionalBundle b;
  b.variance = variance(v, mu);
  b.entropy = entropy(v, mu);
  const std::vector<double> d = gradient(v, mu);
  b.dirichlet = compensated_sum(v.size(), [&](std::size_t i) { return d[i] * d[i] * mu.weight(i); });
  b.fisher = compensated_sum(v.size(), [&](std::size_t i) {
    if (v[i] > 0.0) return d[i] * d[i] / v[i] * mu.weight(i);
    if (d[i] != 0.0) b.fisher_infinite = true;
    return 0.0;
  });
  if (b.fisher_infinite) b.fisher = std::numeric_limits<double>::infinity();
  return b;
}

Centering sqrt_centering(const DensityRatio& f, const GridMeasure& mu, double degeneracy_threshold) {
  std::vector<double> root(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) root[i] = std::sqrt(f[i]);
  const double c = mu.expectation(root);
  const double sigma2 = variance(root, mu);
  if (sigma2 < degeneracy_threshold) {
    throw DegenerateInput(fmt::format("Var(sqrt f) = {:.3e} is below the degeneracy threshold", sigma2));
  }
  std::vector<double> fc(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = root[i] - c;
    fc[i] = d * d / sigma2;
  }
  // The quotient is normalized analytically; rescale away the rounding.
  return {c, sigma2, DensityRatio::normalized(std::move(fc), mu)};
}

DensityRatio exponential_tilt(double m, const GridMeasure& mu) {
  const std::size_t n = mu.size();
  std::vector<double> logf(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    logf[i] = m * mu.node(i);
    top = std::max(top, logf[i] + std::log(mu.weight(i)));
  }
  // log Z = log sum_i mu_i exp(m x_i), evaluated with the max shifted out.
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(logf[i] + std::log(mu.weight(i)) - top);
  const double log_z = top + std::log(z);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = logf[i] - log_z;
    if (e > 700.0) {
      throw InvalidInput(fmt::format("tilt m = {} overflows at node {}; use a smaller |m| or domain", m, i));
    }
    f[i] = std::exp(e);
  }
  return DensityRatio::normalized(std::move(f), mu);
}

DensityRatio gaussian_tilt(double m, const GridMeasure& mu) {
  // V must equal x^2/2 up to an additive constant.
  const auto v = mu.potential();
  const double shift = v[0] - 0.5 * mu.node(0) * mu.node(0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double expected = 0.5 * mu.node(i) * mu.node(i) + shift;
    if (std::abs(v[i] - expected) > 1e-9 * (1.0 + std::abs(expected))) {
      throw InvalidInput("gaussian_tilt requires the standard Gaussian grid measure");
    }
  }
  return exponential_tilt(m, mu);
}

}  // namespace ineqlab
