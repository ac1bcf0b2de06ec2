#pragma once

#include <vector>

#include "spectral.hpp"

namespace klf {

struct ReconstructionReport {
  std::size_t truncation = 0;
  std::size_t eval_n = 0;
  double max_abs_error = 0.0;
  double l2_error = 0.0; // discrete L2(DxD) norm of the difference at N = truncation
  std::vector<std::pair<std::size_t, double>> per_n_curve; // (N, sup error)
};

/// Truncated eigenfunction reconstruction of the kernel:
/// sum over i <= N of lambda_i e_i(s) e_i(t).
double mercer_truncation(const Spectrum &spectrum, std::size_t n_terms, double s,
                         double t);

/// Sup and L2 reconstruction errors on a uniform eval_n x eval_n lattice
/// over D x D, with the sup-error curve filled for every N up to n_max.
ReconstructionReport reconstruction_report(const Spectrum &spectrum,
                                           const Kernel &kernel,
                                           std::size_t n_max,
                                           std::size_t eval_n);

} // namespace klf
