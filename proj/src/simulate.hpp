#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "spectral.hpp"

namespace klf {

/// Deterministic standard-normal variates from a counter-based generator:
/// the k-th draw depends only on (seed, k), never on call order. Stream 0
/// is the plain sequential stream; sample batches use stream = row + 1.
double normal_variate(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t counter);

std::vector<double> standard_normal_stream(std::uint64_t seed, std::size_t count);

/// A truncated KL model: a spectrum plus the truncation order N, restricted
/// to modes whose eigenvalues sit above the usability cutoff.
struct KLModel {
  std::shared_ptr<const Spectrum> spectrum;
  std::size_t truncation;

  KLModel(std::shared_ptr<const Spectrum> spec, std::size_t n_terms);

  /// Truncated variance v_N(t) = sum of lambda_i e_i(t)^2, i <= N.
  double variance_at(double t) const;
  std::vector<double> variance_at_nodes() const;
};

struct SampleBatch {
  KLModel model;
  std::uint64_t seed = 0;
  Matrix xi;     // M x N standard-normal draws
  Matrix fields; // M x n realization values at grid nodes

  std::size_t count() const { return fields.rows(); }
};

/// Draw M truncated KL realizations on the spectrum grid. Realizations are
/// synthesized independently per (row, mode) counter, so output is bitwise
/// identical for a given seed regardless of the worker count.
SampleBatch sample_batch(const KLModel &model, std::size_t m_samples,
                         std::uint64_t seed);

/// Normalized KL coefficients of a field on the model grid:
/// xi_i = inner_product(field, e_i) / sqrt(lambda_i) for i <= N.
std::vector<double> project_coefficients(const KLModel &model,
                                         std::span<const double> field_values);

struct CoefficientStats {
  std::vector<double> mean;
  std::vector<double> variance;
  Matrix correlation; // N x N, unit diagonal
  std::vector<bool> mean_flag;
  std::vector<bool> variance_flag;
  std::vector<std::pair<std::size_t, std::size_t>> correlation_flags;
  double mean_tolerance = 0.0;        // 4 / sqrt(M)
  double variance_tolerance = 0.0;    // 4 sqrt(2/M)
  double correlation_tolerance = 0.0; // 4 / sqrt(M)

  bool any_flag() const;
};

CoefficientStats coefficient_statistics(const SampleBatch &batch);

struct CovarianceReport {
  Matrix covariance;          // n x n second-moment matrix of the fields
  double sup_error_truncated; // sup |C - R_X^N| at grid nodes
  double sup_error_exact;     // sup |C - R_X| at grid nodes
};

CovarianceReport empirical_covariance(const SampleBatch &batch);

struct KsReport {
  double statistic = 0.0;
  double threshold = 0.0; // 1.63 / sqrt(M), asymptotic alpha = 0.01
  std::size_t sample_count = 0;
  bool pass = false;
};

/// Kolmogorov-Smirnov check of the field marginal at t against the standard
/// normal, after standardizing by sqrt(v_N(t)).
KsReport marginal_normality(const SampleBatch &batch, double t);

/// One fixed realization (the shared leading xi stream of the given seed)
/// synthesized at increasing truncation orders; row r = curve for orders[r]
/// evaluated at ts.
Matrix refinement_trajectories(const Spectrum &spectrum,
                               const std::vector<std::size_t> &orders,
                               std::uint64_t seed,
                               const std::vector<double> &ts);

/// Standard normal CDF.
double normal_cdf(double x);

} // namespace klf
