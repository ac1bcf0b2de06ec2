/* C API for the KL field library: opaque handles, integer status codes.
 * All functions returning int give KLF_OK on success; on failure
 * klf_last_error() describes the problem for the calling thread. */
#ifndef KLFIELD_H
#define KLFIELD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define KLF_OK 0
#define KLF_ERR_INVALID_ARGUMENT 1
#define KLF_ERR_NUMERIC 2

#define KLF_KERNEL_EXPONENTIAL 0
#define KLF_KERNEL_SQUARED_EXPONENTIAL 1

#define KLF_RULE_TRAPEZOID 0
#define KLF_RULE_GAUSS_LEGENDRE 1

typedef struct klf_kernel klf_kernel;
typedef struct klf_grid klf_grid;
typedef struct klf_spectrum klf_spectrum;
typedef struct klf_batch klf_batch;

/* Message for the most recent failure on this thread. Never NULL. */
const char *klf_last_error(void);

/* ---- kernels ---- */

int klf_kernel_create(int kind, double sigma2, double corr_len,
                      klf_kernel **out);
void klf_kernel_free(klf_kernel *kernel);
int klf_kernel_eval(const klf_kernel *kernel, double s, double t, double *out);

/* ---- quadrature grids ---- */

int klf_grid_create(double a, double b, size_t n, int rule, klf_grid **out);
void klf_grid_free(klf_grid *grid);
size_t klf_grid_size(const klf_grid *grid);
/* out must hold klf_grid_size() doubles */
int klf_grid_nodes(const klf_grid *grid, double *out);
int klf_grid_weights(const klf_grid *grid, double *out);
int klf_grid_integrate(const klf_grid *grid, const double *values, size_t len,
                       double *out);
int klf_grid_inner_product(const klf_grid *grid, const double *u,
                           const double *v, size_t len, double *out);

/* ---- spectra ---- */

int klf_spectrum_nystrom(const klf_kernel *kernel, const klf_grid *grid,
                         size_t n_modes, klf_spectrum **out);
int klf_spectrum_analytic_exponential(const klf_kernel *kernel,
                                      const klf_grid *grid, size_t n_modes,
                                      klf_spectrum **out);
void klf_spectrum_free(klf_spectrum *spectrum);
size_t klf_spectrum_mode_count(const klf_spectrum *spectrum);
/* out must hold mode_count doubles; eigenvalues descending */
int klf_spectrum_eigenvalues(const klf_spectrum *spectrum, double *out);
/* out must hold grid-size doubles */
int klf_spectrum_eigenfunction_nodes(const klf_spectrum *spectrum, size_t mode,
                                     double *out);
int klf_spectrum_eigenfunction_eval(const klf_spectrum *spectrum, size_t mode,
                                    double t, double *out);
int klf_spectrum_energy_mode_count(const klf_spectrum *spectrum,
                                   double fraction, size_t *out);
/* truncated variance v_N(t) */
int klf_spectrum_variance(const klf_spectrum *spectrum, size_t n_terms,
                          double t, double *out);

/* ---- Mercer reconstruction ---- */

int klf_mercer_eval(const klf_spectrum *spectrum, size_t n_terms, double s,
                    double t, double *out);
/* sup_errors must hold n_max doubles (entry N-1 = sup error at truncation N);
 * l2_error receives the L2(DxD) error at N = n_max; either may be NULL */
int klf_mercer_report(const klf_spectrum *spectrum, size_t n_max,
                      size_t eval_n, double *sup_errors, double *l2_error);

/* ---- sampling and verification ---- */

int klf_sample(const klf_spectrum *spectrum, size_t n_terms, size_t m_samples,
               uint64_t seed, klf_batch **out);
void klf_batch_free(klf_batch *batch);
size_t klf_batch_samples(const klf_batch *batch);
size_t klf_batch_modes(const klf_batch *batch);
size_t klf_batch_nodes(const klf_batch *batch);
/* row-major M x n */
int klf_batch_fields(const klf_batch *batch, double *out);
/* row-major M x N */
int klf_batch_xi(const klf_batch *batch, double *out);

/* field must hold grid-size values; xi_out must hold n_terms values */
int klf_project(const klf_spectrum *spectrum, size_t n_terms,
                const double *field, double *xi_out);

/* means/variances: N doubles; correlation: N*N row-major; flag counters may
 * be NULL. Tolerances follow the 4-sigma CLT envelopes. */
int klf_coefficient_stats(const klf_batch *batch, double *means,
                          double *variances, double *correlation,
                          size_t *flags_tripped);
int klf_covariance_errors(const klf_batch *batch, double *sup_error_truncated,
                          double *sup_error_exact);
int klf_marginal_ks(const klf_batch *batch, double t, double *statistic,
                    double *threshold);
/* curves: row-major n_orders x n_ts; orders must be nondecreasing */
int klf_refinement(const klf_spectrum *spectrum, const size_t *orders,
                   size_t n_orders, uint64_t seed, const double *ts,
                   size_t n_ts, double *curves);

#ifdef __cplusplus
}
#endif

#endif /* KLFIELD_H */
