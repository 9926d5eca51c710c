#include "ineqlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "ineqlab/errors.hpp"

namespace ineqlab {

namespace {

std::vector<double> cdf_knots(std::span<const double> w) {
  std::vector<double> knots(w.size());
  double below = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    knots[i] = below + 0.5 * w[i];
    below += w[i];
  }
  return knots;
}

// Monotone quantile reader: queries must come with nondecreasing u.
class QuantileCursor {
 public:
  QuantileCursor(std::span<const double> nodes, std::vector<double> knots)
      : nodes_(nodes), knots_(std::move(knots)) {}

  double at(double u) {
    while (idx_ < knots_.size() && knots_[idx_] < u) ++idx_;
    if (idx_ == knots_.size()) return nodes_.back();
    if (idx_ == 0) return nodes_.front();
    const double lo = knots_[idx_ - 1];
    const double hi = knots_[idx_];
    return nodes_[idx_ - 1] + (u - lo) / (hi - lo) * (nodes_[idx_] - nodes_[idx_ - 1]);
  }

 private:
  std::span<const double> nodes_;
  std::vector<double> knots_;
  std::size_t idx_ = 0;
};

void require_shared_metric(const FiniteMetricMeasure& source, const FiniteMetricMeasure& target) {
  if (source.dist.rows() != target.dist.rows() || source.dist.cols() != target.dist.cols() ||
      source.dist != target.dist) {
    throw InvalidInput("source and target must be aligned on the same points and distance matrix");
  }
  if (source.weights.size() != static_cast<std::size_t>(source.dist.rows()) ||
      target.weights.size() != source.weights.size()) {
    throw InvalidInput("weights do not match the number of points");
  }
  double sa = 0.0;
  double sb = 0.0;
  for (double w : source.weights) sa += w;
  for (double w : target.weights) sb += w;
  if (std::abs(sa - sb) > 1e-9) {
    throw InvalidInput(fmt::format("infeasible marginals: masses {:.17g} and {:.17g} differ", sa, sb));
  }
}

}  // namespace

double w2_quantile(const GridMeasure& grid, std::span<const double> a, std::span<const double> b,
                   std::size_t quantile_points) {
  if (a.size() != grid.size() || b.size() != grid.size()) throw InvalidInput("weights and grid sizes differ");
  const std::size_t m = quantile_points == 0 ? 8 * grid.size() : quantile_points;
  QuantileCursor qa(grid.nodes(), cdf_knots(a));
  QuantileCursor qb(grid.nodes(), cdf_knots(b));
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
    const double d = qa.at(u) - qb.at(u);
    const double y = d * d - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return std::sqrt(std::max(sum / static_cast<double>(m), 0.0));
}

double w2_quantile(const DensityRatio& nu, const GridMeasure& mu, std::size_t quantile_points) {
  const std::vector<double> a = nu.masses(mu);
  return w2_quantile(mu, a, mu.weights(), quantile_points);
}

void FiniteMetricMeasure::validate(double tolerance) const {
  const auto n = dist.rows();
  if (dist.cols() != n) throw InvalidInput("distance matrix must be square");
  if (weights.size() != static_cast<std::size_t>(n)) throw InvalidInput("weights do not match the number of points");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidInput("weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput(fmt::format("weights sum to {:.17g}, not 1", total));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dist(i, i) != 0.0) throw InvalidInput(fmt::format("nonzero self-distance at point {}", i));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(dist(i, j) >= 0.0) || dist(i, j) != dist(j, i)) {
        throw InvalidInput(fmt::format("distance ({}, {}) is negative or asymmetric", i, j));
      }
    }
  }
  auto check = [&](Eigen::Index i, Eigen::Index j, Eigen::Index k) {
    if (dist(i, k) > dist(i, j) + dist(j, k) + tolerance * (1.0 + dist(i, k))) {
      throw InvalidInput(fmt::format("triangle inequality fails on ({}, {}, {})", i, j, k));
    }
  };
  if (n <= 64) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) check(i, j, k);
  } else {
    std::mt19937_64 rng(0x5eed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (int s = 0; s < 200000; ++s) check(pick(rng), pick(rng), pick(rng));
  }
}

FiniteMetricMeasure FiniteMetricMeasure::on_line(std::span<const double> points, std::vector<double> weights) {
  const auto n = static_cast<Eigen::Index>(points.size());
  FiniteMetricMeasure fm;
  fm.dist.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      fm.dist(i, j) = std::abs(points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)]);
  fm.weights = std::move(weights);
  return fm;
}

FiniteMetricMeasure atomize(const DensityRatio& f, const GridMeasure& mu) {
  return FiniteMetricMeasure::on_line(mu.nodes(), f.masses(mu));
}

double TransportPlan::max_marginal_error() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < coupling.rows(); ++i)
    worst = std::max(worst, std::abs(coupling.row(i).sum() - source[static_cast<std::size_t>(i)]));
  for (Eigen::Index j = 0; j < coupling.cols(); ++j)
    worst = std::max(worst, std::abs(coupling.col(j).sum() - target[static_cast<std::size_t>(j)]));
  return worst;
}

double TransportPlan::cost(const Eigen::MatrixXd& cost_matrix) const {
  return coupling.cwiseProduct(cost_matrix).sum();
}

namespace {

// Basis of the transportation simplex: n + m - 1 cells spanning the bipartite
// graph rows {0..n-1} + columns {n..n+m-1}.
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::MatrixXd& cost, std::vector<double> a, std::vector<double> b)
      : c_(cost), a_(std::move(a)), b_(std::move(b)), n_(a_.size()), m_(b_.size()),
        adj_(n_ + m_), u_(n_), v_(m_) {}

  void north_west_corner() {
    std::vector<double> s = a_;
    std::vector<double> d = b_;
    std::size_t i = 0;
    std::size_t j = 0;
    for (;;) {
      const double x = std::min(s[i], d[j]);
      add_cell(i, j, x);
      s[i] -= x;
      d[j] -= x;
      if (i == n_ - 1 && j == m_ - 1) break;
      if (i == n_ - 1) ++j;
      else if (j == m_ - 1) ++i;
      else if (s[i] <= d[j]) ++i;
      else ++j;
    }
  }

  std::size_t optimize(std::size_t max_pivots) {
    const double scale = 1.0 + c_.cwiseAbs().maxCoeff();
    const double tol = 1e-13 * scale;
    std::size_t pivots = 0;
    for (;;) {
      compute_potentials();
      double best = -tol;
      std::size_t bi = 0;
      std::size_t bj = 0;
      bool found = false;
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < m_; ++j) {
          const double r = c_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - u_[i] - v_[j];
          if (r < best) {
            best = r;
            bi = i;
            bj = j;
            found = true;
          }
        }
      }
      if (!found) return pivots;
      if (++pivots > max_pivots) throw NumericalFailure(fmt::format("transport simplex exceeded {} pivots", max_pivots));
      pivot(bi, bj);
    }
  }

  double primal() const {
    double s = 0.0;
    for (const Cell& cell : cells_) s += cell.flow * c_(static_cast<Eigen::Index>(cell.i), static_cast<Eigen::Index>(cell.j));
    return s;
  }

  Eigen::MatrixXd coupling() const {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m_));
    for (const Cell& cell : cells_) {
      p(static_cast<Eigen::Index>(cell.i), static_cast<Eigen::Index>(cell.j)) += std::max(cell.flow, 0.0);
    }
    return p;
  }

  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& v() const { return v_; }

  void compute_potentials() {
    std::vector<char> seen(n_ + m_, 0);
    std::deque<std::size_t> queue{0};
    seen[0] = 1;
    u_[0] = 0.0;
    std::size_t visited = 1;
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t e : adj_[node]) {
        const Cell& cell = cells_[e];
        const double cij = c_(static_cast<Eigen::Index>(cell.i), static_cast<Eigen::Index>(cell.j));
        const std::size_t other = node < n_ ? n_ + cell.j : cell.i;
        if (seen[other]) continue;
        seen[other] = 1;
        ++visited;
        if (other >= n_) v_[cell.j] = cij - u_[cell.i];
        else u_[cell.i] = cij - v_[cell.j];
        queue.push_back(other);
      }
    }
    if (visited != n_ + m_) throw NumericalFailure("transport basis is not a spanning tree");
  }

 private:
  struct Cell {
    std::size_t i;
    std::size_t j;
    double flow;
  };

  void add_cell(std::size_t i, std::size_t j, double flow) {
    cells_.push_back({i, j, flow});
    adj_[i].push_back(cells_.size() - 1);
    adj_[n_ + j].push_back(cells_.size() - 1);
  }

  void pivot(std::size_t ei, std::size_t ej) {
    // Tree path from row ei to column ej; with the entering cell it closes a cycle.
    const std::size_t start = ei;
    const std::size_t goal = n_ + ej;
    std::vector<std::size_t> parent_edge(n_ + m_, SIZE_MAX);
    std::vector<char> seen(n_ + m_, 0);
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty() && !seen[goal]) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t e : adj_[node]) {
        const Cell& cell = cells_[e];
        const std::size_t other = node < n_ ? n_ + cell.j : cell.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_edge[other] = e;
        queue.push_back(other);
      }
    }
    std::vector<std::size_t> path;  // from the goal back to the start
    for (std::size_t node = goal; node != start;) {
      const std::size_t e = parent_edge[node];
      path.push_back(e);
      const Cell& cell = cells_[e];
      node = node < n_ ? n_ + cell.j : cell.i;
    }
    std::reverse(path.begin(), path.end());
    // path[0] shares row ei with the entering cell: it loses flow, path[1] gains, ...
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = SIZE_MAX;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      if (cells_[path[k]].flow < theta) {
        theta = cells_[path[k]].flow;
        leaving = path[k];
      }
    }
    theta = std::max(theta, 0.0);
    for (std::size_t k = 0; k < path.size(); ++k) cells_[path[k]].flow += (k % 2 == 0) ? -theta : theta;

    Cell& out = cells_[leaving];
    auto drop = [&](std::size_t node) {
      auto& list = adj_[node];
      list.erase(std::find(list.begin(), list.end(), leaving));
    };
    drop(out.i);
    drop(n_ + out.j);
    out = Cell{ei, ej, theta};
    adj_[ei].push_back(leaving);
    adj_[n_ + ej].push_back(leaving);
  }

  const Eigen::MatrixXd& c_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::size_t n_;
  std::size_t m_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> u_;
  std::vector<double> v_;
};

}  // namespace

LpSolution w2_lp(const FiniteMetricMeasure& source, const FiniteMetricMeasure& target, double p,
                 const LpOptions& options) {
  if (!(p >= 1.0)) throw InvalidInput("transport exponent must be >= 1");
  require_shared_metric(source, target);
  const std::size_t n = source.weights.size();
  if (n > options.size_cap) {
    throw InvalidInput(fmt::format("LP size {}x{} exceeds the cap {}; use sinkhorn", n, n, options.size_cap));
  }
  Eigen::MatrixXd cost = p == 2.0 ? Eigen::MatrixXd(source.dist.cwiseProduct(source.dist))
                                  : Eigen::MatrixXd(source.dist.array().pow(p));

  TransportSimplex simplex(cost, source.weights, target.weights);
  simplex.north_west_corner();
  const std::size_t max_pivots = options.max_pivots ? options.max_pivots : 50 * (2 * n) * (2 * n);

  LpSolution sol;
  sol.pivots = simplex.optimize(max_pivots);
  sol.cost = std::max(simplex.primal(), 0.0);
  sol.distance = std::pow(sol.cost, 1.0 / p);
  sol.plan.coupling = simplex.coupling();
  sol.plan.source = source.weights;
  sol.plan.target = target.weights;

  std::vector<double> phi = simplex.u();
  std::vector<double> psi = simplex.v();
  double shift = 0.0;
  for (std::size_t j = 0; j < n; ++j) shift += target.weights[j] * psi[j];
  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] += shift;
    psi[i] -= shift;
    dual += source.weights[i] * phi[i] + target.weights[i] * psi[i];
  }
  sol.source_potential = std::move(phi);
  sol.target_potential = std::move(psi);
  sol.duality_gap = std::abs(simplex.primal() - dual);
  return sol;
}

SinkhornResult sinkhorn(const FiniteMetricMeasure& source, const FiniteMetricMeasure& target,
                        const SinkhornOptions& options) {
  if (!(options.epsilon > 0.0)) throw InvalidInput("sinkhorn epsilon must be > 0");
  if (!(options.tolerance > 0.0)) throw InvalidInput("sinkhorn tolerance must be > 0");
  const bool adaptive = options.overrelaxation == 0.0;
  if (!adaptive && !(options.overrelaxation >= 1.0 && options.overrelaxation < 2.0)) {
    throw InvalidInput("sinkhorn overrelaxation must be 0 (adaptive) or lie in [1, 2)");
  }
  require_shared_metric(source, target);
  const std::size_t n = source.weights.size();
  const Eigen::MatrixXd cost = source.dist.cwiseProduct(source.dist);
  const double eps = options.epsilon;
  const auto& a = source.weights;
  const auto& b = target.weights;

  const auto N = static_cast<Eigen::Index>(n);
  // The metric is symmetric, so column i of the cost is also row i and every
  // update below reads contiguous memory.
  const Eigen::ArrayXXd c = cost.array();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Eigen::ArrayXd fa = Eigen::ArrayXd::Zero(N);
  Eigen::ArrayXd ga = Eigen::ArrayXd::Zero(N);
  Eigen::ArrayXd t(N);
  constexpr double kExpFloor = -700.0;
  auto soft_min = [&](const Eigen::ArrayXd& pot, Eigen::Index k) {
    t = (pot - c.col(k)) / eps;
    const double top = t.maxCoeff();
    if (!std::isfinite(top)) return top;
    // Terms below e^-700 change nothing but would go through subnormals.
    return top + std::log((t - top).max(kExpFloor).exp().sum());
  };

  SinkhornResult res;
  double err = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  constexpr std::size_t kCheckEvery = 10;
  double omega = adaptive ? 1.0 : options.overrelaxation;
  bool pinned = false;
  int stalled = 0;
  double last_err = std::numeric_limits<double>::infinity();
  double best_err = last_err;
  while (it < options.max_iterations) {
    ++it;
    for (Eigen::Index i = 0; i < N; ++i) {
      const double ai = a[static_cast<std::size_t>(i)];
      if (ai <= 0.0) {
        fa(i) = kNegInf;
        continue;
      }
      const double step = eps * (std::log(ai) - soft_min(ga, i));
      fa(i) = it == 1 ? step : (1.0 - omega) * fa(i) + omega * step;
    }
    for (Eigen::Index j = 0; j < N; ++j) {
      const double bj = b[static_cast<std::size_t>(j)];
      if (bj <= 0.0) {
        ga(j) = kNegInf;
        continue;
      }
      const double step = eps * (std::log(bj) - soft_min(fa, j));
      ga(j) = it == 1 ? step : (1.0 - omega) * ga(j) + omega * step;
    }
    if (it % kCheckEvery != 0 && it < options.max_iterations) continue;
    err = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      const double ai = a[static_cast<std::size_t>(i)];
      const double r = ai > 0.0 ? ((fa(i) + ga - c.col(i)) / eps).max(kExpFloor).exp().sum() : 0.0;
      err += std::abs(r - ai);
    }
    for (Eigen::Index j = 0; j < N; ++j) {
      const double bj = b[static_cast<std::size_t>(j)];
      const double r = bj > 0.0 ? ((fa + ga(j) - c.col(j)) / eps).max(kExpFloor).exp().sum() : 0.0;
      err += std::abs(r - bj);
    }
    if (err <= options.tolerance) break;
    if (adaptive && !pinned && it == 3 * kCheckEvery && omega == 1.0) {
      // Plain rate eta over the last block; the SOR choice 2 / (1 + sqrt(1 - eta)).
      const double eta = std::pow(err / last_err, 1.0 / static_cast<double>(kCheckEvery));
      if (eta > 0.0 && eta < 1.0) omega = std::min(2.0 / (1.0 + std::sqrt(1.0 - eta)), 1.95);
    } else if (omega > 1.0) {
      // Relaxed steps may overshoot for a while; plain Sinkhorn converges from
      // any potentials, so fall back to it for good once progress stalls.
      if (!std::isfinite(err)) {
        fa.setZero();
        ga.setZero();
        omega = 1.0;
        pinned = true;
      } else if (err < best_err) {
        best_err = err;
        stalled = 0;
      } else if (++stalled >= 20) {
        omega = 1.0;
        pinned = true;
      }
    }
    best_err = std::min(best_err, err);
    last_err = err;
  }
  if (err > options.tolerance) {
    throw NumericalFailure(fmt::format("sinkhorn did not converge in {} iterations; marginal error {:.3e}",
                                       options.max_iterations, err));
  }
  const std::vector<double> f(fa.begin(), fa.end());
  const std::vector<double> g(ga.begin(), ga.end());
  auto entry = [&](std::size_t i, std::size_t j) {
    return std::exp((f[i] + g[j] - cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) / eps);
  };
  res.iterations = it;
  res.marginal_error = err;

  // Rounding onto the transport polytope: shrink rows, shrink columns, then
  // restore the deficits with a rank-one correction.
  Eigen::MatrixXd plan(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j)
      plan(i, j) = (a[static_cast<std::size_t>(i)] > 0.0 && b[static_cast<std::size_t>(j)] > 0.0)
                       ? entry(static_cast<std::size_t>(i), static_cast<std::size_t>(j))
                       : 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    const double r = plan.row(i).sum();
    if (r > 0.0) plan.row(i) *= std::min(a[static_cast<std::size_t>(i)] / r, 1.0);
  }
  for (Eigen::Index j = 0; j < N; ++j) {
    const double c = plan.col(j).sum();
    if (c > 0.0) plan.col(j) *= std::min(b[static_cast<std::size_t>(j)] / c, 1.0);
  }
  Eigen::VectorXd dr(N);
  Eigen::VectorXd dc(N);
  for (Eigen::Index i = 0; i < N; ++i) dr(i) = std::max(a[static_cast<std::size_t>(i)] - plan.row(i).sum(), 0.0);
  for (Eigen::Index j = 0; j < N; ++j) dc(j) = std::max(b[static_cast<std::size_t>(j)] - plan.col(j).sum(), 0.0);
  const double deficit = dr.sum();
  if (deficit > 0.0) plan += dr * dc.transpose() / deficit;

  res.plan.coupling = plan;
  res.plan.source = a;
  res.plan.target = b;
  res.upper = res.plan.cost(cost);
  res.w2 = std::sqrt(std::max(res.upper, 0.0));

  // c-transform of g gives a dual-feasible pair, hence a lower bound.
  double lower = 0.0;
  for (std::size_t j = 0; j < n; ++j) if (b[j] > 0.0) lower += b[j] * g[j];
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] <= 0.0) continue;
    double ct = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (b[j] > 0.0) ct = std::min(ct, cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - g[j]);
    }
    lower += a[i] * ct;
  }
  res.lower = lower;
  return res;
}

}  // namespace ineqlab
