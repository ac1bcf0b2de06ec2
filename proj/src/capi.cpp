#include "klfield/klfield.h"

#include <cstring>
#include <memory>
#include <string>

#include "mercer.hpp"
#include "simulate.hpp"

struct klf_kernel {
  klf::Kernel kernel;
};

struct klf_grid {
  klf::Grid grid;
};

struct klf_spectrum {
  std::shared_ptr<const klf::Spectrum> spectrum;
};

struct klf_batch {
  klf::SampleBatch batch;
};

namespace {

thread_local std::string g_last_error = "no error";

int fail(int code, const char *what) {
  g_last_error = what;
  return code;
}

// Runs a body that fills its outputs, translating exceptions to status codes.
template <typename Fn> int guarded(Fn &&fn) {
  try {
    fn();
    return KLF_OK;
  } catch (const klf::NumericError &e) {
    return fail(KLF_ERR_NUMERIC, e.what());
  } catch (const std::exception &e) {
    return fail(KLF_ERR_INVALID_ARGUMENT, e.what());
  }
}

bool require(bool cond, const char *what) {
  if (!cond)
    g_last_error = what;
  return cond;
}

} // namespace

extern "C" {

const char *klf_last_error(void) { return g_last_error.c_str(); }

int klf_kernel_create(int kind, double sigma2, double corr_len,
                      klf_kernel **out) {
  if (!require(out != nullptr, "klf_kernel_create: out is NULL"))
    return KLF_ERR_INVALID_ARGUMENT;
  if (kind != KLF_KERNEL_EXPONENTIAL && kind != KLF_KERNEL_SQUARED_EXPONENTIAL)
    return fail(KLF_ERR_INVALID_ARGUMENT, "klf_kernel_create: unknown kind");
  return guarded([&] {
    const auto k = (kind == KLF_KERNEL_EXPONENTIAL)
                       ? klf::KernelKind::Exponential
                       : klf::KernelKind::SquaredExponential;
    *out = new klf_kernel{klf::Kernel(k, sigma2, corr_len)};
  });
}

void klf_kernel_free(klf_kernel *kernel) { delete kernel; }

int klf_kernel_eval(const klf_kernel *kernel, double s, double t, double *out) {
  if (!require(kernel && out, "klf_kernel_eval: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  *out = kernel->kernel(s, t);
  return KLF_OK;
}

int klf_grid_create(double a, double b, size_t n, int rule, klf_grid **out) {
  if (!require(out != nullptr, "klf_grid_create: out is NULL"))
    return KLF_ERR_INVALID_ARGUMENT;
  if (rule != KLF_RULE_TRAPEZOID && rule != KLF_RULE_GAUSS_LEGENDRE)
    return fail(KLF_ERR_INVALID_ARGUMENT, "klf_grid_create: unknown rule");
  return guarded([&] {
    const auto r = (rule == KLF_RULE_TRAPEZOID)
                       ? klf::QuadratureRule::Trapezoid
                       : klf::QuadratureRule::GaussLegendre;
    *out = new klf_grid{klf::make_grid(klf::Domain(a, b), n, r)};
  });
}

void klf_grid_free(klf_grid *grid) { delete grid; }

size_t klf_grid_size(const klf_grid *grid) {
  return grid ? grid->grid.size() : 0;
}

int klf_grid_nodes(const klf_grid *grid, double *out) {
  if (!require(grid && out, "klf_grid_nodes: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  std::memcpy(out, grid->grid.nodes().data(),
              grid->grid.size() * sizeof(double));
  return KLF_OK;
}

int klf_grid_weights(const klf_grid *grid, double *out) {
  if (!require(grid && out, "klf_grid_weights: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  std::memcpy(out, grid->grid.weights().data(),
              grid->grid.size() * sizeof(double));
  return KLF_OK;
}

int klf_grid_integrate(const klf_grid *grid, const double *values, size_t len,
                       double *out) {
  if (!require(grid && values && out, "klf_grid_integrate: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] { *out = klf::integrate(grid->grid, {values, len}); });
}

int klf_grid_inner_product(const klf_grid *grid, const double *u,
                           const double *v, size_t len, double *out) {
  if (!require(grid && u && v && out, "klf_grid_inner_product: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded(
      [&] { *out = klf::inner_product(grid->grid, {u, len}, {v, len}); });
}

int klf_spectrum_nystrom(const klf_kernel *kernel, const klf_grid *grid,
                         size_t n_modes, klf_spectrum **out) {
  if (!require(kernel && grid && out, "klf_spectrum_nystrom: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new klf_spectrum{std::make_shared<const klf::Spectrum>(
        klf::nystrom_spectrum(kernel->kernel, grid->grid, n_modes))};
  });
}

int klf_spectrum_analytic_exponential(const klf_kernel *kernel,
                                      const klf_grid *grid, size_t n_modes,
                                      klf_spectrum **out) {
  if (!require(kernel && grid && out,
               "klf_spectrum_analytic_exponential: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new klf_spectrum{std::make_shared<const klf::Spectrum>(
        klf::analytic_spectrum_exponential(kernel->kernel, grid->grid,
                                           n_modes))};
  });
}

void klf_spectrum_free(klf_spectrum *spectrum) { delete spectrum; }

size_t klf_spectrum_mode_count(const klf_spectrum *spectrum) {
  return spectrum ? spectrum->spectrum->mode_count() : 0;
}

int klf_spectrum_eigenvalues(const klf_spectrum *spectrum, double *out) {
  if (!require(spectrum && out, "klf_spectrum_eigenvalues: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  const auto &v = spectrum->spectrum->eigenvalues();
  std::memcpy(out, v.data(), v.size() * sizeof(double));
  return KLF_OK;
}

int klf_spectrum_eigenfunction_nodes(const klf_spectrum *spectrum, size_t mode,
                                     double *out) {
  if (!require(spectrum && out,
               "klf_spectrum_eigenfunction_nodes: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto col = spectrum->spectrum->eigenfunction_nodes(mode);
    std::memcpy(out, col.data(), col.size() * sizeof(double));
  });
}

int klf_spectrum_eigenfunction_eval(const klf_spectrum *spectrum, size_t mode,
                                    double t, double *out) {
  if (!require(spectrum && out,
               "klf_spectrum_eigenfunction_eval: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded(
      [&] { *out = spectrum->spectrum->eigenfunction_value(mode, t); });
}

int klf_spectrum_energy_mode_count(const klf_spectrum *spectrum,
                                   double fraction, size_t *out) {
  if (!require(spectrum && out,
               "klf_spectrum_energy_mode_count: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded(
      [&] { *out = klf::mode_count_for_energy(*spectrum->spectrum, fraction); });
}

int klf_spectrum_variance(const klf_spectrum *spectrum, size_t n_terms,
                          double t, double *out) {
  if (!require(spectrum && out, "klf_spectrum_variance: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const klf::KLModel model(spectrum->spectrum, n_terms);
    *out = model.variance_at(t);
  });
}

int klf_mercer_eval(const klf_spectrum *spectrum, size_t n_terms, double s,
                    double t, double *out) {
  if (!require(spectrum && out, "klf_mercer_eval: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = klf::mercer_truncation(*spectrum->spectrum, n_terms, s, t);
  });
}

int klf_mercer_report(const klf_spectrum *spectrum, size_t n_max,
                      size_t eval_n, double *sup_errors, double *l2_error) {
  if (!require(spectrum != nullptr, "klf_mercer_report: NULL spectrum"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto report = klf::reconstruction_report(
        *spectrum->spectrum, spectrum->spectrum->kernel(), n_max, eval_n);
    if (sup_errors)
      for (std::size_t i = 0; i < report.per_n_curve.size(); ++i)
        sup_errors[i] = report.per_n_curve[i].second;
    if (l2_error)
      *l2_error = report.l2_error;
  });
}

int klf_sample(const klf_spectrum *spectrum, size_t n_terms, size_t m_samples,
               uint64_t seed, klf_batch **out) {
  if (!require(spectrum && out, "klf_sample: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const klf::KLModel model(spectrum->spectrum, n_terms);
    *out = new klf_batch{klf::sample_batch(model, m_samples, seed)};
  });
}

void klf_batch_free(klf_batch *batch) { delete batch; }

size_t klf_batch_samples(const klf_batch *batch) {
  return batch ? batch->batch.count() : 0;
}

size_t klf_batch_modes(const klf_batch *batch) {
  return batch ? batch->batch.xi.cols() : 0;
}

size_t klf_batch_nodes(const klf_batch *batch) {
  return batch ? batch->batch.fields.cols() : 0;
}

int klf_batch_fields(const klf_batch *batch, double *out) {
  if (!require(batch && out, "klf_batch_fields: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  const auto &f = batch->batch.fields;
  std::memcpy(out, f.data(), f.rows() * f.cols() * sizeof(double));
  return KLF_OK;
}

int klf_batch_xi(const klf_batch *batch, double *out) {
  if (!require(batch && out, "klf_batch_xi: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  const auto &x = batch->batch.xi;
  std::memcpy(out, x.data(), x.rows() * x.cols() * sizeof(double));
  return KLF_OK;
}

int klf_project(const klf_spectrum *spectrum, size_t n_terms,
                const double *field, double *xi_out) {
  if (!require(spectrum && field && xi_out, "klf_project: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const klf::KLModel model(spectrum->spectrum, n_terms);
    const auto xi = klf::project_coefficients(
        model, {field, spectrum->spectrum->grid().size()});
    std::memcpy(xi_out, xi.data(), xi.size() * sizeof(double));
  });
}

int klf_coefficient_stats(const klf_batch *batch, double *means,
                          double *variances, double *correlation,
                          size_t *flags_tripped) {
  if (!require(batch != nullptr, "klf_coefficient_stats: NULL batch"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto stats = klf::coefficient_statistics(batch->batch);
    const std::size_t n = stats.mean.size();
    if (means)
      std::memcpy(means, stats.mean.data(), n * sizeof(double));
    if (variances)
      std::memcpy(variances, stats.variance.data(), n * sizeof(double));
    if (correlation)
      std::memcpy(correlation, stats.correlation.data(),
                  n * n * sizeof(double));
    if (flags_tripped) {
      std::size_t count = stats.correlation_flags.size();
      for (std::size_t i = 0; i < n; ++i)
        count += (stats.mean_flag[i] ? 1 : 0) + (stats.variance_flag[i] ? 1 : 0);
      *flags_tripped = count;
    }
  });
}

int klf_covariance_errors(const klf_batch *batch, double *sup_error_truncated,
                          double *sup_error_exact) {
  if (!require(batch != nullptr, "klf_covariance_errors: NULL batch"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto report = klf::empirical_covariance(batch->batch);
    if (sup_error_truncated)
      *sup_error_truncated = report.sup_error_truncated;
    if (sup_error_exact)
      *sup_error_exact = report.sup_error_exact;
  });
}

int klf_marginal_ks(const klf_batch *batch, double t, double *statistic,
                    double *threshold) {
  if (!require(batch != nullptr, "klf_marginal_ks: NULL batch"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto report = klf::marginal_normality(batch->batch, t);
    if (statistic)
      *statistic = report.statistic;
    if (threshold)
      *threshold = report.threshold;
  });
}

int klf_refinement(const klf_spectrum *spectrum, const size_t *orders,
                   size_t n_orders, uint64_t seed, const double *ts,
                   size_t n_ts, double *curves) {
  if (!require(spectrum && orders && ts && curves,
               "klf_refinement: NULL argument"))
    return KLF_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const std::vector<std::size_t> order_list(orders, orders + n_orders);
    const std::vector<double> t_list(ts, ts + n_ts);
    const auto result = klf::refinement_trajectories(*spectrum->spectrum,
                                                     order_list, seed, t_list);
    std::memcpy(curves, result.data(),
                result.rows() * result.cols() * sizeof(double));
  });
}

} // extern "C"
