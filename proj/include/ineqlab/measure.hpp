#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ineqlab {

using Potential = std::function<double(double)>;

struct Domain {
  double lo = 0.0;
  double hi = 0.0;
};

/// A probability measure proportional to exp(-V) on a uniform 1D grid.
///
/// Weights are normalized point masses, mu_i = exp(-V(x_i)) / sum_j exp(-V(x_j)).
/// The spacing dx cancels in the normalization but is kept for gradients,
/// Dirichlet forms and the transport metric d(x, y) = |x - y|.
class GridMeasure {
 public:
  /// Discretizes exp(-V) on `n` equispaced nodes of `domain`.
  /// Throws InvalidInput on n < 3, hi <= lo or a non-finite V at a node.
  static GridMeasure build(const Potential& potential, Domain domain, std::size_t n);

  /// Same, from precomputed potential values on the nodes.
  static GridMeasure from_potential(std::vector<double> potential, Domain domain);

  /// A measure with explicit weights on equispaced nodes (n >= 2).  The
  /// potential is recorded as -log(weight) up to a constant.
  static GridMeasure from_weights(std::vector<double> weights, Domain domain);

  std::size_t size() const { return nodes_.size(); }
  double dx() const { return dx_; }
  Domain domain() const { return {nodes_.front(), nodes_.back()}; }
  double node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> potential() const { return potential_; }

  /// Sum_i g_i mu_i.
  double expectation(std::span<const double> g) const;

  /// Index of the node nearest to x (ties toward the smaller index).
  std::size_t nearest_node(double x) const;

 private:
  GridMeasure() = default;
  static void validate_domain(Domain domain, std::size_t n, std::size_t min_n);

  std::vector<double> nodes_;
  std::vector<double> potential_;
  std::vector<double> weights_;
  double dx_ = 0.0;
};

/// Mass that exp(-V) would place outside `domain`, estimated by rebuilding the
/// measure on the domain doubled about its center at the same spacing.
double truncation_tail_mass(const Potential& potential, Domain domain, std::size_t n);

/// Throws InvalidInput when truncation_tail_mass exceeds `tolerance`.
void check_truncation(const Potential& potential, Domain domain, std::size_t n,
                      double tolerance = 1e-12);

/// Smallest symmetric domain [-R, R] (R on a 1/8 lattice, at most `max_radius`)
/// whose exp(-V) tail mass is below `tolerance`.
Domain symmetric_domain_for_tail(const Potential& potential, double tolerance = 1e-12,
                                 double max_radius = 64.0);

/// Density of nu = f mu with respect to mu: f_i >= 0 and sum_i f_i mu_i = 1.
class DensityRatio {
 public:
  DensityRatio() = default;

  /// Validates nonnegativity and normalization (within 1e-10).
  static DensityRatio checked(std::vector<double> values, const GridMeasure& mu);

  /// Rescales nonnegative values so mu(f) = 1.
  static DensityRatio normalized(std::vector<double> values, const GridMeasure& mu);

  /// f = 1.
  static DensityRatio constant(const GridMeasure& mu);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  /// Point masses f_i mu_i of nu.
  std::vector<double> masses(const GridMeasure& mu) const;

 private:
  explicit DensityRatio(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

struct FunctionalBundle {
  double variance = 0.0;
  double entropy = 0.0;
  double fisher = 0.0;
  double dirichlet = 0.0;
  // Set when f vanishes at a node where its gradient does not; fisher is +inf.
  bool fisher_infinite = false;
};

/// Central differences in the interior, one-sided at the two ends.
std::vector<double> gradient(std::span<const double> g, const GridMeasure& mu);

double mean(std::span<const double> g, const GridMeasure& mu);
double variance(std::span<const double> g, const GridMeasure& mu);
/// Ent(g) = mu(g log g) - mu(g) log mu(g), with 0 log 0 = 0.  Requires g >= 0.
double entropy(std::span<const double> g, const GridMeasure& mu);
/// mu(|g'|^2) with the stencil of `gradient`.
double dirichlet_energy(std::span<const double> g, const GridMeasure& mu);

/// Variance, entropy, Fisher information I(f) = mu(|f'|^2 / f) and Dirichlet
/// energy of a density ratio.  Throws InvalidInput on negative entries.
FunctionalBundle functionals(const DensityRatio& f, const GridMeasure& mu);

/// Objects of the square-root centering of f.
struct Centering {
  double c = 0.0;       // mu(sqrt f)
  double sigma2 = 0.0;  // Var(sqrt f)
  DensityRatio f_c;     // (sqrt f - c)^2 / sigma2
};

/// Throws DegenerateInput when Var(sqrt f) < degeneracy_threshold.
Centering sqrt_centering(const DensityRatio& f, const GridMeasure& mu,
                         double degeneracy_threshold = 1e-12);

/// f proportional to exp(m x), normalized on the grid.  Valid for any mu;
/// throws InvalidInput if exp overflows after normalization.
DensityRatio exponential_tilt(double m, const GridMeasure& mu);

/// exponential_tilt restricted to the standard Gaussian measure (V = x^2/2 up
/// to a constant), where it is the density of N(m, 1) against N(0, 1).
DensityRatio gaussian_tilt(double m, const GridMeasure& mu);

}  // namespace ineqlab
