#pragma once

#include <cmath>
#include <stdexcept>

#include "matrix.hpp"

namespace klf {

struct Domain {
  double a;
  double b;

  Domain(double a_, double b_) : a(a_), b(b_) {
    if (!(a < b))
      throw std::invalid_argument("Domain: require a < b");
  }

  double length() const { return b - a; }
  double midpoint() const { return 0.5 * (a + b); }
};

enum class KernelKind { Exponential, SquaredExponential };

/// Stationary autocorrelation kernel k(s,t) with k(t,t) = sigma2.
/// Parameters are validated once at construction; evaluation is branch-light.
class Kernel {
public:
  Kernel(KernelKind kind, double sigma2, double corr_len)
      : kind_(kind), sigma2_(sigma2), inv_len_(1.0 / corr_len), corr_len_(corr_len) {
    if (sigma2 < 0.0)
      throw std::invalid_argument("Kernel: sigma2 must be >= 0");
    if (!(corr_len > 0.0))
      throw std::invalid_argument("Kernel: corr_len must be > 0");
  }

  double operator()(double s, double t) const {
    const double d = s - t;
    if (kind_ == KernelKind::Exponential)
      return sigma2_ * std::exp(-std::abs(d) * inv_len_);
    return sigma2_ * std::exp(-0.5 * d * d * inv_len_ * inv_len_);
  }

  KernelKind kind() const { return kind_; }
  double sigma2() const { return sigma2_; }
  double corr_len() const { return corr_len_; }

private:
  KernelKind kind_;
  double sigma2_;
  double inv_len_;
  double corr_len_;
};

class Grid;

/// n x n matrix A with A[i][j] = k(t_i, t_j). Each off-diagonal entry is
/// computed once and mirrored, so A is symmetric bit for bit.
Matrix kernel_matrix(const Kernel &kernel, const Grid &grid);

} // namespace klf
