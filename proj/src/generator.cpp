#include "ineqlab/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include <fmt/format.h>

#include "ineqlab/errors.hpp"

namespace ineqlab {

struct GeneratorMatrix::Cache {
  std::once_flag once;
  Spectrum spectrum;
};

GeneratorMatrix GeneratorMatrix::from_measure(const GridMeasure& mu) {
  const std::size_t n = mu.size();
  if (n < 3) throw InvalidInput("generator needs at least 3 nodes");
  const double inv_dx2 = 1.0 / (mu.dx() * mu.dx());
  GeneratorMatrix L;
  L.weights_.assign(mu.weights().begin(), mu.weights().end());
  L.up_.resize(n - 1);
  L.down_.resize(n - 1);
  const auto v = mu.potential();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    // sqrt(mu_{i+1}/mu_i) = exp(-(V_{i+1} - V_i)/2), without forming the ratio.
    const double half_jump = 0.5 * (v[i + 1] - v[i]);
    L.up_[i] = inv_dx2 * std::exp(-half_jump);
    L.down_[i] = inv_dx2 * std::exp(half_jump);
  }
  L.cache_ = std::make_shared<Cache>();
  return L;
}

GeneratorMatrix GeneratorMatrix::from_rates(std::vector<double> weights, std::vector<double> up,
                                            std::vector<double> down) {
  const std::size_t n = weights.size();
  if (n < 2) throw InvalidInput("generator needs at least 2 states");
  if (up.size() != n - 1 || down.size() != n - 1) throw InvalidInput("rate vectors must have n - 1 entries");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidInput("reference weights must be positive");
    total += w;
  }
  for (double& w : weights) w /= total;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(up[i] >= 0.0) || !(down[i] >= 0.0)) throw InvalidInput(fmt::format("negative rate at edge {}", i));
    const double fwd = weights[i] * up[i];
    const double bwd = weights[i + 1] * down[i];
    if (std::abs(fwd - bwd) > 1e-12 * std::max({fwd, bwd, std::numeric_limits<double>::min()})) {
      throw InvalidInput(fmt::format("rates violate detailed balance at edge {}", i));
    }
  }
  GeneratorMatrix L;
  L.weights_ = std::move(weights);
  L.up_ = std::move(up);
  L.down_ = std::move(down);
  L.cache_ = std::make_shared<Cache>();
  return L;
}

double GeneratorMatrix::diagonal(std::size_t i) const {
  double d = 0.0;
  if (i + 1 < size()) d -= up_[i];
  if (i > 0) d -= down_[i - 1];
  return d;
}

std::vector<double> GeneratorMatrix::apply(std::span<const double> g) const {
  const std::size_t n = size();
  if (g.size() != n) throw InvalidInput("function and generator sizes differ");
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    if (i + 1 < n) acc += up_[i] * (g[i + 1] - g[i]);
    if (i > 0) acc += down_[i - 1] * (g[i - 1] - g[i]);
    out[i] = acc;
  }
  return out;
}

double GeneratorMatrix::dirichlet_form(std::span<const double> g) const {
  if (g.size() != size()) throw InvalidInput("function and generator sizes differ");
  double e = 0.0;
  for (std::size_t i = 0; i + 1 < size(); ++i) {
    const double d = g[i + 1] - g[i];
    e += weights_[i] * up_[i] * d * d;
  }
  return e;
}

Eigen::MatrixXd GeneratorMatrix::dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = diagonal(static_cast<std::size_t>(i));
    if (i + 1 < n) {
      m(i, i + 1) = up_[static_cast<std::size_t>(i)];
      m(i + 1, i) = down_[static_cast<std::size_t>(i)];
    }
  }
  return m;
}

Eigen::MatrixXd GeneratorMatrix::symmetrized_dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = diagonal(static_cast<std::size_t>(i));
    if (i + 1 < n) {
      const auto k = static_cast<std::size_t>(i);
      m(i, i + 1) = m(i + 1, i) = std::sqrt(up_[k] * down_[k]);
    }
  }
  return m;
}

double GeneratorMatrix::row_sum_residual() const {
  // Row sums of the assembled matrix, each scaled by its largest entry.
  double worst = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double sum = diagonal(i);
    double scale = std::abs(diagonal(i));
    if (i + 1 < size()) sum += up_[i];
    if (i > 0) sum += down_[i - 1];
    if (scale > 0.0) worst = std::max(worst, std::abs(sum) / scale);
  }
  return worst;
}

double GeneratorMatrix::detailed_balance_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < size(); ++i) {
    const double fwd = weights_[i] * up_[i];
    const double bwd = weights_[i + 1] * down_[i];
    const double scale = std::max(fwd, bwd);
    if (scale > 0.0) worst = std::max(worst, std::abs(fwd - bwd) / scale);
  }
  return worst;
}

bool GeneratorMatrix::connected() const {
  for (std::size_t i = 0; i + 1 < size(); ++i) {
    if (!(up_[i] > 0.0) || !(down_[i] > 0.0)) return false;
  }
  return true;
}

const Spectrum& GeneratorMatrix::spectrum() const {
  std::call_once(cache_->once, [this] {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max<Eigen::Index>(n - 1, 0));
    for (Eigen::Index i = 0; i < n; ++i) diag(i) = -diagonal(static_cast<std::size_t>(i));
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      sub(i) = -std::sqrt(up_[k] * down_[k]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw NumericalFailure("tridiagonal eigensolver did not converge");
    Spectrum& s = cache_->spectrum;
    s.rates = solver.eigenvalues();
    s.vectors = solver.eigenvectors();
    s.sqrt_weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) s.sqrt_weights(i) = std::sqrt(weights_[static_cast<std::size_t>(i)]);
    Eigen::Index best = 0;
    (s.vectors.transpose() * s.sqrt_weights).cwiseAbs().maxCoeff(&best);
    s.constant_mode = static_cast<std::size_t>(best);
  });
  return cache_->spectrum;
}

std::vector<double> semigroup_apply(const GeneratorMatrix& L, std::span<const double> g, double t) {
  if (!(t >= 0.0)) throw InvalidInput(fmt::format("semigroup time must be >= 0, got {}", t));
  if (g.size() != L.size()) throw InvalidInput("function and generator sizes differ");
  if (t == 0.0) return {g.begin(), g.end()};
  // Rows of L sum to zero, so constants are fixed exactly; the spectral route
  // would divide round-off by sqrt(mu_i) in the tails.
  if (std::all_of(g.begin(), g.end(), [&](double v) { return v == g.front(); })) return {g.begin(), g.end()};
  const Spectrum& s = L.spectrum();
  const auto n = static_cast<Eigen::Index>(L.size());
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = s.sqrt_weights(i) * g[static_cast<std::size_t>(i)];
  Eigen::VectorXd c = s.vectors.transpose() * u;
  for (Eigen::Index k = 0; k < n; ++k) {
    // The constant mode is exactly invariant; its computed rate is round-off.
    if (static_cast<std::size_t>(k) != s.constant_mode) c(k) *= std::exp(-s.rates(k) * t);
  }
  const Eigen::VectorXd ut = s.vectors * c;
  std::vector<double> out(L.size());
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = ut(i) / s.sqrt_weights(i);
  return out;
}

DensityRatio evolve(const GeneratorMatrix& L, const DensityRatio& f, double t, const GridMeasure& mu) {
  if (!(t >= 0.0)) throw InvalidInput(fmt::format("evolve time must be >= 0, got {}", t));
  if (t == 0.0) return f;
  std::vector<double> out = semigroup_apply(L, f.values(), t);
  constexpr double kClamp = 1e-10;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0) {
      if (out[i] < -kClamp) {
        throw NumericalFailure(
            fmt::format("P_t f = {:.3e} < -{:.0e} at node {} (t = {})", out[i], kClamp, i, t));
      }
      out[i] = 0.0;
    }
  }
  return DensityRatio::normalized(std::move(out), mu);
}

double spectral_gap(const GeneratorMatrix& L) {
  if (!L.connected()) throw DegenerateInput("chain is disconnected: the spectral gap is 0");
  const Spectrum& s = L.spectrum();
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < s.rates.size(); ++k) {
    if (static_cast<std::size_t>(k) != s.constant_mode) gap = std::min(gap, s.rates(k));
  }
  if (!(gap > 0.0)) throw NumericalFailure("nonpositive spectral gap on a connected chain");
  return 1.0 / gap;
}

LsiSearch LsiSearch::defaults(const GridMeasure& mu) {
  LsiSearch s;
  for (int k = -20; k <= 20; ++k) s.tilt_slopes.push_back(0.1 * k);
  const Domain d = mu.domain();
  const double mid = 0.5 * (d.lo + d.hi);
  const double half = 0.25 * (d.hi - d.lo);
  for (int k = -4; k <= 4; ++k) s.bump_centers.push_back(mid + half * k / 4.0);
  const double scale = (d.hi - d.lo) / 16.0;
  s.bump_widths = {0.5 * scale, scale, 2.0 * scale};
  return s;
}

LsiEstimate lsi_constant(const GridMeasure& mu, const LsiSearch& search) {
  LsiEstimate best;
  auto consider = [&](const DensityRatio& f, const std::string& label) {
    const FunctionalBundle b = functionals(f, mu);
    // 0/0 from the constant density, or an unbounded Fisher term: no information.
    if (!(b.fisher > 0.0) || b.fisher_infinite) {
      ++best.members_skipped;
      return;
    }
    ++best.members_evaluated;
    const double ratio = 2.0 * b.entropy / b.fisher;
    if (ratio > best.lower_bound || best.witness.size() == 0) {
      best.lower_bound = ratio;
      best.witness = f;
      best.witness_label = label;
    }
  };
  for (double s : search.tilt_slopes) consider(exponential_tilt(s, mu), fmt::format("tilt({})", s));
  for (double c : search.bump_centers) {
    for (double w : search.bump_widths) {
      std::vector<double> v(mu.size());
      for (std::size_t i = 0; i < mu.size(); ++i) {
        const double z = (mu.node(i) - c) / w;
        v[i] = search.bump_floor + std::exp(-0.5 * z * z);
      }
      consider(DensityRatio::normalized(std::move(v), mu), fmt::format("bump({},{})", c, w));
    }
  }
  if (best.members_evaluated == 0) throw InvalidInput("LSI search family has no informative member");
  return best;
}

double curvature_lower_bound(const GridMeasure& mu) {
  if (mu.size() < 5) throw InvalidInput("curvature needs at least 5 nodes");
  const auto v = mu.potential();
  const double inv_dx2 = 1.0 / (mu.dx() * mu.dx());
  double rho = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < mu.size(); ++i) {
    rho = std::min(rho, (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_dx2);
  }
  return rho;
}

FlowTrace flow_trace(const GeneratorMatrix& L, const GridMeasure& mu, const DensityRatio& f,
                     std::span<const double> times, const W2Backend& backend) {
  if (times.empty() || times.front() != 0.0) throw InvalidInput("trace times must start at 0");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw InvalidInput("trace times must be increasing");
  }
  std::vector<double> root(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) root[i] = std::sqrt(f[i]);
  const double m = mu.expectation(root);

  FlowTrace tr;
  for (double t : times) {
    try {
      const DensityRatio ft = evolve(L, f, t, mu);
      const FunctionalBundle b = functionals(ft, mu);
      const std::vector<double> gt = semigroup_apply(L, root, t);
      double s2 = 0.0;
      double q4 = 0.0;
      for (std::size_t i = 0; i < gt.size(); ++i) {
        const double d2 = (gt[i] - m) * (gt[i] - m);
        s2 += d2 * mu.weight(i);
        q4 += d2 * d2 * mu.weight(i);
      }
      tr.times.push_back(t);
      tr.variance.push_back(b.variance);
      tr.entropy.push_back(b.entropy);
      tr.fisher.push_back(b.fisher);
      tr.w2.push_back(backend(ft, mu));
      tr.sigma2.push_back(s2);
      tr.lambda.push_back(q4 + 3.0 * s2 * s2);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(fmt::format("flow trace at t = {}: {}", t, e.what()));
    } catch (const InvalidInput& e) {
      throw InvalidInput(fmt::format("flow trace at t = {}: {}", t, e.what()));
    }
  }
  return tr;
}

}  // namespace ineqlab
