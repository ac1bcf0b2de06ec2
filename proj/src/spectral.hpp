#pragma once

#include <vector>

#include "kernels.hpp"
#include "quadrature.hpp"

namespace klf {

/// Thrown when an iterative numeric routine fails (eigensolver sweep budget,
/// root bracketing). Maps to a distinct exit code at the CLI boundary.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct EigenDecomposition {
  std::vector<double> values; // descending
  Matrix vectors;             // column k pairs with values[k]; orthonormal
};

/// Full eigendecomposition of a symmetric matrix: Householder reduction to
/// tridiagonal form followed by implicit-shift QL, eigenvalues returned
/// descending. Rejects non-square or asymmetric input.
EigenDecomposition symmetric_eigen(const Matrix &a);

enum class SpectrumMethod { Nystrom, Analytic };

/// Relative eigenvalue floor below which a mode is unusable for KL work:
/// no Nystrom interpolation, no coefficient normalization.
inline constexpr double kModeCutoff = 1e-12;

/// Ordered eigenpairs of the autocorrelation integral operator on a grid.
/// Eigenfunction columns are orthonormal in the grid's discrete inner
/// product; each is sign-fixed so its first nonzero node value is positive.
class Spectrum {
public:
  Spectrum(Grid grid, Kernel kernel, SpectrumMethod method,
           std::vector<double> eigenvalues, Matrix eigenfunctions);

  const Grid &grid() const { return grid_; }
  const Kernel &kernel() const { return kernel_; }
  SpectrumMethod method() const { return method_; }
  std::size_t mode_count() const { return eigenvalues_.size(); }
  const std::vector<double> &eigenvalues() const { return eigenvalues_; }

  /// Node values of mode i (length = grid size).
  std::vector<double> eigenfunction_nodes(std::size_t i) const;
  const Matrix &eigenfunction_matrix() const { return eigenfunctions_; }

  /// Evaluate mode i anywhere in the domain. Nystrom spectra interpolate
  /// through the integral operator; analytic spectra use the closed form.
  /// Rejects modes with eigenvalue at or below the cutoff.
  double eigenfunction_value(std::size_t i, double t) const;

  /// Number of leading modes usable for KL synthesis (above the cutoff).
  std::size_t usable_modes() const;

  struct AnalyticMode {
    double omega;
    bool even;
    double scale; // normalization applied to cos/sin(omega * (t - mid))
  };

  void set_analytic_modes(std::vector<AnalyticMode> modes);

private:
  Grid grid_;
  Kernel kernel_;
  SpectrumMethod method_;
  std::vector<double> eigenvalues_;
  Matrix eigenfunctions_; // n x modes, column i = e_i at nodes
  std::vector<AnalyticMode> analytic_;
};

/// Discretize the integral operator with the grid's quadrature rule,
/// symmetrize as B = W^{1/2} A W^{1/2}, eigendecompose, and rescale the
/// eigenvectors to grid-orthonormal eigenfunction values. Keeps the top
/// n_modes eigenpairs.
Spectrum nystrom_spectrum(const Kernel &kernel, const Grid &grid,
                          std::size_t n_modes);

/// Closed-form eigenpairs of the exponential kernel on [a,b]: cosine/sine
/// modes about the midpoint whose frequencies solve the transcendental
/// characteristic equations on the half-width interval, with
/// lambda = 2 c sigma2 / (omega^2 + c^2), c = 1/corr_len.
Spectrum analytic_spectrum_exponential(const Kernel &kernel, const Grid &grid,
                                       std::size_t n_modes);

/// Smallest N whose leading eigenvalues capture the given fraction of the
/// total spectrum energy.
std::size_t mode_count_for_energy(const Spectrum &spectrum, double fraction);

} // namespace klf
