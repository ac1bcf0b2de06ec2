#include "quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace klf {

Grid::Grid(Domain domain, std::vector<double> nodes, std::vector<double> weights,
           QuadratureRule rule)
    : domain_(domain), nodes_(std::move(nodes)), weights_(std::move(weights)),
      rule_(rule) {
  if (nodes_.size() < 2)
    throw std::invalid_argument("Grid: need at least 2 nodes");
  if (nodes_.size() != weights_.size())
    throw std::invalid_argument("Grid: node/weight count mismatch");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i] < domain_.a || nodes_[i] > domain_.b)
      throw std::invalid_argument("Grid: node outside domain");
    if (i > 0 && !(nodes_[i - 1] < nodes_[i]))
      throw std::invalid_argument("Grid: nodes must be strictly increasing");
    if (!(weights_[i] > 0.0))
      throw std::invalid_argument("Grid: weights must be positive");
  }
}

namespace {

// Legendre P_n and P_n' at x via the three-term recurrence.
void legendre(std::size_t n, double x, double &p, double &dp) {
  double p0 = 1.0, p1 = x;
  for (std::size_t k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration with the
// cosine initial guess, converged to 1e-14.
void gauss_legendre_reference(std::size_t n, std::vector<double> &x,
                              std::vector<double> &w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double xi = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
    double p = 0.0, dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      legendre(n, xi, p, dp);
      const double delta = p / dp;
      xi -= delta;
      if (std::abs(delta) <= 1e-14)
        break;
    }
    legendre(n, xi, p, dp);
    x[k] = xi;
    w[k] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
}

} // namespace

Grid make_grid(Domain domain, std::size_t n, QuadratureRule rule) {
  if (n < 2)
    throw std::invalid_argument("make_grid: need n >= 2");
  std::vector<double> nodes(n), weights(n);
  if (rule == QuadratureRule::Trapezoid) {
    const double h = domain.length() / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      nodes[i] = domain.a + h * static_cast<double>(i);
      weights[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
    }
    nodes.back() = domain.b;
  } else {
    std::vector<double> x, w;
    gauss_legendre_reference(n, x, w);
    const double mid = domain.midpoint();
    const double half = 0.5 * domain.length();
    // reference nodes come out descending; map and reverse
    for (std::size_t i = 0; i < n; ++i) {
      nodes[i] = mid + half * x[n - 1 - i];
      weights[i] = half * w[n - 1 - i];
    }
  }
  return Grid(domain, std::move(nodes), std::move(weights), rule);
}

double integrate(const Grid &grid, std::span<const double> values) {
  if (values.size() != grid.size())
    throw std::invalid_argument("integrate: value count does not match grid");
  const auto &w = grid.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    acc += w[i] * values[i];
  return acc;
}

double inner_product(const Grid &grid, std::span<const double> u,
                     std::span<const double> v) {
  if (u.size() != grid.size() || v.size() != grid.size())
    throw std::invalid_argument("inner_product: length mismatch");
  const auto &w = grid.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    acc += w[i] * u[i] * v[i];
  return acc;
}

} // namespace klf
