#include "simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "parallel.hpp"

namespace klf {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t counter) {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (stream + 0xd1b54a32d192ed03ULL));
  h = mix64(h ^ (counter + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

// 53-bit uniform in the open interval (0, 1)
inline double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

} // namespace

double normal_variate(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t counter) {
  const double u1 = to_open_unit(counter_hash(seed, stream, 2 * counter));
  const double u2 = to_open_unit(counter_hash(seed, stream, 2 * counter + 1));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> standard_normal_stream(std::uint64_t seed, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k)
    out[k] = normal_variate(seed, 0, k);
  return out;
}

KLModel::KLModel(std::shared_ptr<const Spectrum> spec, std::size_t n_terms)
    : spectrum(std::move(spec)), truncation(n_terms) {
  if (!spectrum)
    throw std::invalid_argument("KLModel: null spectrum");
  if (n_terms == 0 || n_terms > spectrum->usable_modes())
    throw std::invalid_argument(
        "KLModel: truncation order exceeds usable (above-cutoff) modes");
}

double KLModel::variance_at(double t) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < truncation; ++i) {
    const double e = spectrum->eigenfunction_value(i, t);
    acc += spectrum->eigenvalues()[i] * e * e;
  }
  return acc;
}

std::vector<double> KLModel::variance_at_nodes() const {
  const auto &funcs = spectrum->eigenfunction_matrix();
  std::vector<double> v(spectrum->grid().size(), 0.0);
  for (std::size_t i = 0; i < truncation; ++i) {
    const double lambda = spectrum->eigenvalues()[i];
    for (std::size_t j = 0; j < v.size(); ++j)
      v[j] += lambda * funcs(j, i) * funcs(j, i);
  }
  return v;
}

SampleBatch sample_batch(const KLModel &model, std::size_t m_samples,
                         std::uint64_t seed) {
  if (m_samples < 1)
    throw std::invalid_argument("sample_batch: need M >= 1");
  const Spectrum &spec = *model.spectrum;
  const std::size_t n = spec.grid().size();
  const std::size_t n_modes = model.truncation;

  std::vector<double> amplitude(n_modes);
  for (std::size_t i = 0; i < n_modes; ++i)
    amplitude[i] = std::sqrt(spec.eigenvalues()[i]);
  const Matrix &funcs = spec.eigenfunction_matrix();

  SampleBatch batch{model, seed, Matrix(m_samples, n_modes),
                    Matrix(m_samples, n)};
  parallel_for(m_samples, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      double *xi = batch.xi.row(m);
      double *field = batch.fields.row(m);
      for (std::size_t i = 0; i < n_modes; ++i)
        xi[i] = normal_variate(seed, m + 1, i);
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_modes; ++i)
          acc += amplitude[i] * xi[i] * funcs(j, i);
        field[j] = acc;
      }
    }
  });
  return batch;
}

std::vector<double> project_coefficients(const KLModel &model,
                                         std::span<const double> field_values) {
  const Spectrum &spec = *model.spectrum;
  if (field_values.size() != spec.grid().size())
    throw std::invalid_argument("project_coefficients: field size mismatch");
  const double floor = kModeCutoff * spec.eigenvalues().front();
  std::vector<double> xi(model.truncation);
  const Matrix &funcs = spec.eigenfunction_matrix();
  const auto &w = spec.grid().weights();
  for (std::size_t i = 0; i < model.truncation; ++i) {
    const double lambda = spec.eigenvalues()[i];
    if (lambda <= floor)
      throw std::invalid_argument(
          "project_coefficients: mode below usability cutoff");
    double acc = 0.0;
    for (std::size_t j = 0; j < field_values.size(); ++j)
      acc += w[j] * field_values[j] * funcs(j, i);
    xi[i] = acc / std::sqrt(lambda);
  }
  return xi;
}

bool CoefficientStats::any_flag() const {
  if (!correlation_flags.empty())
    return true;
  for (std::size_t i = 0; i < mean_flag.size(); ++i)
    if (mean_flag[i] || variance_flag[i])
      return true;
  return false;
}

CoefficientStats coefficient_statistics(const SampleBatch &batch) {
  const std::size_t m = batch.count();
  if (m < 2)
    throw std::invalid_argument("coefficient_statistics: need M >= 2");
  const std::size_t n_modes = batch.xi.cols();
  const double inv_m = 1.0 / static_cast<double>(m);

  CoefficientStats stats;
  stats.mean.assign(n_modes, 0.0);
  stats.variance.assign(n_modes, 0.0);
  stats.correlation = Matrix(n_modes, n_modes, 0.0);
  stats.mean_tolerance = 4.0 / std::sqrt(static_cast<double>(m));
  stats.variance_tolerance = 4.0 * std::sqrt(2.0 / static_cast<double>(m));
  stats.correlation_tolerance = stats.mean_tolerance;

  for (std::size_t r = 0; r < m; ++r) {
    const double *xi = batch.xi.row(r);
    for (std::size_t i = 0; i < n_modes; ++i)
      stats.mean[i] += xi[i];
  }
  for (std::size_t i = 0; i < n_modes; ++i)
    stats.mean[i] *= inv_m;

  Matrix cov(n_modes, n_modes, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double *xi = batch.xi.row(r);
    for (std::size_t i = 0; i < n_modes; ++i) {
      const double di = xi[i] - stats.mean[i];
      for (std::size_t j = i; j < n_modes; ++j)
        cov(i, j) += di * (xi[j] - stats.mean[j]);
    }
  }
  const double bessel = 1.0 / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < n_modes; ++i)
    for (std::size_t j = i; j < n_modes; ++j) {
      cov(i, j) *= bessel;
      cov(j, i) = cov(i, j);
    }
  for (std::size_t i = 0; i < n_modes; ++i)
    stats.variance[i] = cov(i, i);

  stats.mean_flag.resize(n_modes);
  stats.variance_flag.resize(n_modes);
  for (std::size_t i = 0; i < n_modes; ++i) {
    stats.mean_flag[i] = std::abs(stats.mean[i]) > stats.mean_tolerance;
    stats.variance_flag[i] =
        std::abs(stats.variance[i] - 1.0) > stats.variance_tolerance;
  }
  for (std::size_t i = 0; i < n_modes; ++i) {
    for (std::size_t j = 0; j < n_modes; ++j) {
      if (i == j) {
        stats.correlation(i, j) = 1.0;
        continue;
      }
      const double denom = std::sqrt(stats.variance[i] * stats.variance[j]);
      const double corr = denom > 0.0 ? cov(i, j) / denom : 0.0;
      stats.correlation(i, j) = corr;
      if (j > i && std::abs(corr) > stats.correlation_tolerance)
        stats.correlation_flags.emplace_back(i, j);
    }
  }
  return stats;
}

CovarianceReport empirical_covariance(const SampleBatch &batch) {
  const std::size_t m = batch.count();
  if (m < 2)
    throw std::invalid_argument("empirical_covariance: need M >= 2");
  const Spectrum &spec = *batch.model.spectrum;
  const std::size_t n = spec.grid().size();
  const double inv_m = 1.0 / static_cast<double>(m);

  CovarianceReport report;
  report.covariance = Matrix(n, n, 0.0);
  Matrix &cov = report.covariance;
  // the process is centered, so the second moment is the covariance
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      for (std::size_t r = 0; r < m; ++r) {
        const double *f = batch.fields.row(r);
        const double fj = f[j];
        double *out = cov.row(j);
        for (std::size_t k = j; k < n; ++k)
          out[k] += fj * f[k];
      }
    }
  });
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j; k < n; ++k) {
      cov(j, k) *= inv_m;
      cov(k, j) = cov(j, k);
    }

  const auto &nodes = spec.grid().nodes();
  const Matrix &funcs = spec.eigenfunction_matrix();
  double sup_trunc = 0.0, sup_exact = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j; k < n; ++k) {
      double truncated = 0.0;
      for (std::size_t i = 0; i < batch.model.truncation; ++i)
        truncated += spec.eigenvalues()[i] * funcs(j, i) * funcs(k, i);
      sup_trunc = std::max(sup_trunc, std::abs(cov(j, k) - truncated));
      sup_exact = std::max(
          sup_exact, std::abs(cov(j, k) - spec.kernel()(nodes[j], nodes[k])));
    }
  report.sup_error_truncated = sup_trunc;
  report.sup_error_exact = sup_exact;
  return report;
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

KsReport marginal_normality(const SampleBatch &batch, double t) {
  const std::size_t m = batch.count();
  if (m < 100)
    throw std::invalid_argument("marginal_normality: need M >= 100");
  const Spectrum &spec = *batch.model.spectrum;
  const double v = batch.model.variance_at(t);
  if (v < 1e-12 * spec.kernel().sigma2())
    throw std::invalid_argument(
        "marginal_normality: truncated variance too small to standardize");
  const double inv_sd = 1.0 / std::sqrt(v);

  std::vector<double> e_at_t(batch.model.truncation);
  for (std::size_t i = 0; i < batch.model.truncation; ++i)
    e_at_t[i] = std::sqrt(spec.eigenvalues()[i]) *
                spec.eigenfunction_value(i, t);

  std::vector<double> samples(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double *xi = batch.xi.row(r);
    double acc = 0.0;
    for (std::size_t i = 0; i < e_at_t.size(); ++i)
      acc += e_at_t[i] * xi[i];
    samples[r] = acc * inv_sd;
  }
  std::sort(samples.begin(), samples.end());

  double d_stat = 0.0;
  const double inv_count = 1.0 / static_cast<double>(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double cdf = normal_cdf(samples[r]);
    d_stat = std::max(d_stat, cdf - static_cast<double>(r) * inv_count);
    d_stat = std::max(d_stat, static_cast<double>(r + 1) * inv_count - cdf);
  }

  KsReport report;
  report.statistic = d_stat;
  report.threshold = 1.63 / std::sqrt(static_cast<double>(m));
  report.sample_count = m;
  report.pass = d_stat <= report.threshold;
  return report;
}

Matrix refinement_trajectories(const Spectrum &spectrum,
                               const std::vector<std::size_t> &orders,
                               std::uint64_t seed,
                               const std::vector<double> &ts) {
  if (orders.empty() || ts.empty())
    throw std::invalid_argument("refinement_trajectories: empty request");
  for (std::size_t r = 1; r < orders.size(); ++r)
    if (orders[r] < orders[r - 1])
      throw std::invalid_argument(
          "refinement_trajectories: orders must be nondecreasing");
  const std::size_t n_max = orders.back();
  if (n_max == 0 || n_max > spectrum.usable_modes())
    throw std::invalid_argument(
        "refinement_trajectories: order exceeds usable modes");

  // shared xi stream: the first realization of a batch with this seed
  std::vector<double> xi(n_max);
  for (std::size_t i = 0; i < n_max; ++i)
    xi[i] = normal_variate(seed, 1, i);

  Matrix values(n_max, ts.size());
  for (std::size_t i = 0; i < n_max; ++i)
    for (std::size_t p = 0; p < ts.size(); ++p)
      values(i, p) = std::sqrt(spectrum.eigenvalues()[i]) * xi[i] *
                     spectrum.eigenfunction_value(i, ts[p]);

  Matrix curves(orders.size(), ts.size(), 0.0);
  std::vector<double> acc(ts.size(), 0.0);
  std::size_t mode = 0;
  for (std::size_t r = 0; r < orders.size(); ++r) {
    while (mode < orders[r]) {
      for (std::size_t p = 0; p < ts.size(); ++p)
        acc[p] += values(mode, p);
      ++mode;
    }
    for (std::size_t p = 0; p < ts.size(); ++p)
      curves(r, p) = acc[p];
  }
  return curves;
}

} // namespace klf
