#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ineqlab/measure.hpp"

namespace ineqlab {

/// V for a named model ("ou", "double_well", "quartic", "uniform") or, for
/// any other text, the parsed expression in x.
Potential named_potential(const std::string& name_or_expression);

/// Names accepted by named_potential without parsing.
std::vector<std::string> potential_names();

/// f proportional to w exp(a x) + (1 - w) exp(-a x).
DensityRatio two_tilt_mixture(double a, double w, const GridMeasure& mu);

/// f proportional to exp(sum_k amplitude_k sin(k x / 2 + phase_k)), k = 1..modes,
/// amplitudes uniform in [-amplitude, amplitude], phases uniform in [0, 2 pi).
DensityRatio random_smooth_density(std::uint64_t seed, double amplitude, int modes, const GridMeasure& mu);

struct LabeledDensity {
  std::string label;
  DensityRatio f;
};

struct MixtureSpec {
  double a = 1.0;
  double w = 0.5;
};

struct DensityFamilySpec {
  std::vector<double> tilts{-1.0, -0.5, -0.25, 0.25, 0.5, 1.0};
  std::vector<MixtureSpec> mixtures{{1.0, 0.5}, {1.5, 0.5}, {2.0, 0.3}, {0.75, 0.8}};
  int random_count = 10;
  double random_amplitude = 0.4;
  int random_modes = 4;
  bool include_constant = false;
};

/// The family in a fixed order: tilts, mixtures, random members (seeded from
/// `seed` and the member index), then the constant density.
std::vector<LabeledDensity> density_family(const DensityFamilySpec& spec, std::uint64_t seed, const GridMeasure& mu);

}  // namespace ineqlab
