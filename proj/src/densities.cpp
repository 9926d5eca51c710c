#include "ineqlab/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "ineqlab/errors.hpp"
#include "ineqlab/expression.hpp"

namespace ineqlab {

Potential named_potential(const std::string& name) {
  if (name == "ou") return [](double x) { return 0.5 * x * x; };
  if (name == "double_well") return [](double x) { return x * x * x * x - 2.0 * x * x; };
  if (name == "quartic") return [](double x) { return x * x * x * x; };
  if (name == "uniform") return [](double) { return 0.0; };
  const Expression e = Expression::parse(name);
  return [e](double x) { return e(x); };
}

std::vector<std::string> potential_names() { return {"ou", "double_well", "quartic", "uniform"}; }

namespace {

// Normalizes exp(log_values) without overflow.
DensityRatio from_log_values(std::vector<double> log_values, const GridMeasure& mu) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_values) top = std::max(top, v);
  for (double& v : log_values) v = std::exp(v - top);
  return DensityRatio::normalized(std::move(log_values), mu);
}

}  // namespace

DensityRatio two_tilt_mixture(double a, double w, const GridMeasure& mu) {
  if (!(w >= 0.0 && w <= 1.0)) throw InvalidInput(fmt::format("mixture weight must lie in [0, 1], got {}", w));
  std::vector<double> logs(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double x = mu.node(i);
    const double p = w > 0.0 ? std::log(w) + a * x : -std::numeric_limits<double>::infinity();
    const double q = w < 1.0 ? std::log1p(-w) - a * x : -std::numeric_limits<double>::infinity();
    const double m = std::max(p, q);
    logs[i] = m + std::log(std::exp(p - m) + std::exp(q - m));
  }
  return from_log_values(std::move(logs), mu);
}

DensityRatio random_smooth_density(std::uint64_t seed, double amplitude, int modes, const GridMeasure& mu) {
  if (modes < 1) throw InvalidInput("random density needs at least one mode");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-amplitude, amplitude);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> a(static_cast<std::size_t>(modes));
  std::vector<double> ph(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = amp(rng);
    ph[k] = phase(rng);
  }
  std::vector<double> logs(mu.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      logs[i] += a[k] * std::sin(0.5 * static_cast<double>(k + 1) * mu.node(i) + ph[k]);
    }
  }
  return from_log_values(std::move(logs), mu);
}

std::vector<LabeledDensity> density_family(const DensityFamilySpec& spec, std::uint64_t seed, const GridMeasure& mu) {
  std::vector<LabeledDensity> out;
  for (double m : spec.tilts) out.push_back({fmt::format("tilt({})", m), exponential_tilt(m, mu)});
  for (const MixtureSpec& mix : spec.mixtures) {
    out.push_back({fmt::format("mixture({},{})", mix.a, mix.w), two_tilt_mixture(mix.a, mix.w, mu)});
  }
  for (int k = 0; k < spec.random_count; ++k) {
    const std::uint64_t member_seed = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k + 1);
    out.push_back({fmt::format("random({})", k),
                   random_smooth_density(member_seed, spec.random_amplitude, spec.random_modes, mu)});
  }
  if (spec.include_constant) out.push_back({"constant", DensityRatio::constant(mu)});
  return out;
}

}  // namespace ineqlab
