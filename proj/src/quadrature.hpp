#pragma once

#include <span>
#include <vector>

#include "kernels.hpp"

namespace klf {

enum class QuadratureRule { Trapezoid, GaussLegendre };

/// Quadrature nodes and weights on a Domain; the discrete stand-in for L2.
/// Nodes are strictly increasing, weights strictly positive, and the weights
/// integrate the constant 1 to b - a up to round-off.
class Grid {
public:
  Grid(Domain domain, std::vector<double> nodes, std::vector<double> weights,
       QuadratureRule rule);

  const Domain &domain() const { return domain_; }
  QuadratureRule rule() const { return rule_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<double> &nodes() const { return nodes_; }
  const std::vector<double> &weights() const { return weights_; }

private:
  Domain domain_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  QuadratureRule rule_;
};

Grid make_grid(Domain domain, std::size_t n, QuadratureRule rule);

/// Sum of w_i * values[i].
double integrate(const Grid &grid, std::span<const double> values);

/// Discrete L2(D) inner product: sum of w_i * u_i * v_i.
double inner_product(const Grid &grid, std::span<const double> u,
                     std::span<const double> v);

} // namespace klf
