#include "mercer.hpp"

#include <cmath>

namespace klf {

double mercer_truncation(const Spectrum &spectrum, std::size_t n_terms, double s,
                         double t) {
  if (n_terms == 0 || n_terms > spectrum.mode_count())
    throw std::invalid_argument("mercer_truncation: N exceeds stored modes");
  double acc = 0.0;
  for (std::size_t i = 0; i < n_terms; ++i)
    // grouping (e_s * e_t) keeps the sum bitwise symmetric in (s, t)
    acc += spectrum.eigenvalues()[i] * (spectrum.eigenfunction_value(i, s) *
                                        spectrum.eigenfunction_value(i, t));
  return acc;
}

ReconstructionReport reconstruction_report(const Spectrum &spectrum,
                                           const Kernel &kernel,
                                           std::size_t n_max,
                                           std::size_t eval_n) {
  if (n_max == 0 || n_max > spectrum.mode_count())
    throw std::invalid_argument("reconstruction_report: N_max exceeds stored modes");
  if (eval_n < 2)
    throw std::invalid_argument("reconstruction_report: eval_n must be >= 2");

  const Domain &dom = spectrum.grid().domain();
  std::vector<double> pts(eval_n);
  const double h = dom.length() / static_cast<double>(eval_n - 1);
  for (std::size_t p = 0; p < eval_n; ++p)
    pts[p] = dom.a + h * static_cast<double>(p);
  pts.back() = dom.b;

  // mode values on the lattice, one pass per mode
  Matrix modes(n_max, eval_n);
  for (std::size_t i = 0; i < n_max; ++i)
    for (std::size_t p = 0; p < eval_n; ++p)
      modes(i, p) = spectrum.eigenfunction_value(i, pts[p]);

  Matrix target(eval_n, eval_n);
  for (std::size_t p = 0; p < eval_n; ++p)
    for (std::size_t q = 0; q < eval_n; ++q)
      target(p, q) = kernel(pts[p], pts[q]);

  ReconstructionReport report;
  report.truncation = n_max;
  report.eval_n = eval_n;
  report.per_n_curve.reserve(n_max);

  Matrix partial(eval_n, eval_n, 0.0);
  for (std::size_t i = 0; i < n_max; ++i) {
    const double lambda = spectrum.eigenvalues()[i];
    const double *row = modes.row(i);
    for (std::size_t p = 0; p < eval_n; ++p) {
      const double lp = lambda * row[p];
      double *out = partial.row(p);
      for (std::size_t q = 0; q < eval_n; ++q)
        out[q] += lp * row[q];
    }
    double sup = 0.0;
    for (std::size_t p = 0; p < eval_n; ++p)
      for (std::size_t q = 0; q < eval_n; ++q)
        sup = std::max(sup, std::abs(target(p, q) - partial(p, q)));
    report.per_n_curve.emplace_back(i + 1, sup);
  }
  report.max_abs_error = report.per_n_curve.back().second;

  // trapezoid L2(DxD) norm of the final difference
  double l2 = 0.0;
  for (std::size_t p = 0; p < eval_n; ++p) {
    const double wp = (p == 0 || p == eval_n - 1) ? 0.5 * h : h;
    for (std::size_t q = 0; q < eval_n; ++q) {
      const double wq = (q == 0 || q == eval_n - 1) ? 0.5 * h : h;
      const double d = target(p, q) - partial(p, q);
      l2 += wp * wq * d * d;
    }
  }
  report.l2_error = std::sqrt(l2);
  return report;
}

} // namespace klf
