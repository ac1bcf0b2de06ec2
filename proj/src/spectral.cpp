#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace klf {

namespace {

// Householder reduction of a symmetric matrix to tridiagonal form with
// accumulation of the orthogonal transform (EISPACK tred2 lineage,
// restructured so every inner loop walks rows contiguously). On exit d
// holds the diagonal, e the subdiagonal (e[0] = 0), and z the transform
// with vectors as columns.
void householder_tridiagonalize(Matrix &z, std::vector<double> &d,
                                std::vector<double> &e) {
  const int n = static_cast<int>(z.rows());
  std::vector<double> g(n, 0.0);
  for (int i = n - 1; i > 0; --i) {
    const int l = i - 1;
    double h = 0.0;
    if (l > 0) {
      double scale = 0.0;
      for (int k = 0; k <= l; ++k)
        scale += std::abs(z(i, k));
      if (scale == 0.0) {
        e[i] = z(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          z(i, k) /= scale;
          h += z(i, k) * z(i, k);
        }
        double f = z(i, l);
        const double sg = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * sg;
        h -= f * sg;
        z(i, l) = f - sg;
        // g = A u with A the lower-stored symmetric [0..l] block, u = row i
        for (int j = 0; j <= l; ++j)
          g[j] = z(j, j) * z(i, j);
        for (int k = 1; k <= l; ++k) {
          const double uk = z(i, k);
          const double *rk = z.row(k);
          const double *ri = z.row(i);
          double acc = 0.0;
          for (int j = 0; j < k; ++j) {
            acc += rk[j] * ri[j];
            g[j] += rk[j] * uk;
          }
          g[k] += acc;
        }
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          z(j, i) = z(i, j) / h;
          e[j] = g[j] / h;
          f += e[j] * z(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          const double fj = z(i, j);
          const double gj = e[j] - hh * fj;
          e[j] = gj;
          double *rj = z.row(j);
          const double *ri = z.row(i);
          for (int k = 0; k <= j; ++k)
            rj[k] -= fj * e[k] + gj * ri[k];
        }
      }
    } else {
      e[i] = z(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    if (d[i] != 0.0) {
      for (int j = 0; j < i; ++j)
        g[j] = 0.0;
      for (int k = 0; k < i; ++k) {
        const double uik = z(i, k);
        const double *rk = z.row(k);
        for (int j = 0; j < i; ++j)
          g[j] += uik * rk[j];
      }
      for (int k = 0; k < i; ++k) {
        const double cki = z(k, i);
        double *rk = z.row(k);
        for (int j = 0; j < i; ++j)
          rk[j] -= g[j] * cki;
      }
    }
    d[i] = z(i, i);
    z(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      z(j, i) = 0.0;
      z(i, j) = 0.0;
    }
  }
}

// Implicit-shift QL on a tridiagonal matrix, rotating the accumulated
// transform along. v stores one eigenvector per ROW so the rotation loop
// stays contiguous.
void tridiagonal_ql(std::vector<double> &d, std::vector<double> &e, Matrix &v) {
  const int n = static_cast<int>(d.size());
  for (int i = 1; i < n; ++i)
    e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd)
          break;
      }
      if (m != l) {
        if (iter++ == 60)
          throw NumericError("symmetric_eigen: QL iteration did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          double *lo = v.row(i);
          double *hi = v.row(i + 1);
          for (int k = 0; k < n; ++k) {
            f = hi[k];
            hi[k] = s * lo[k] + c * f;
            lo[k] = c * lo[k] - s * f;
          }
        }
        if (r == 0.0 && i >= l)
          continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

} // namespace

EigenDecomposition symmetric_eigen(const Matrix &a) {
  const std::size_t n = a.rows();
  if (n == 0 || a.cols() != n)
    throw std::invalid_argument("symmetric_eigen: matrix must be square");
  double max_abs = 0.0, max_asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      max_abs = std::max(max_abs, std::abs(a(i, j)));
      max_asym = std::max(max_asym, std::abs(a(i, j) - a(j, i)));
    }
  if (max_asym > 1e-12 * std::max(max_abs, 1.0))
    throw std::invalid_argument("symmetric_eigen: matrix is not symmetric");

  Matrix z = a;
  std::vector<double> d(n, 0.0), e(n, 0.0);
  householder_tridiagonalize(z, d, e);

  Matrix v(n, n); // row r = vector paired with d[r]
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k)
      v(r, k) = z(k, r);
  tridiagonal_ql(d, e, v);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&d](std::size_t x, std::size_t y) { return d[x] > d[y]; });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = d[order[j]];
    const double *src = v.row(order[j]);
    for (std::size_t k = 0; k < n; ++k)
      out.vectors(k, j) = src[k];
  }
  return out;
}

namespace {

// Flip a column so the first nonzero node value is positive.
void fix_sign(Matrix &funcs, std::size_t col) {
  for (std::size_t j = 0; j < funcs.rows(); ++j) {
    const double v = funcs(j, col);
    if (v > 0.0)
      return;
    if (v < 0.0) {
      for (std::size_t k = 0; k < funcs.rows(); ++k)
        funcs(k, col) = -funcs(k, col);
      return;
    }
  }
}

} // namespace

Spectrum::Spectrum(Grid grid, Kernel kernel, SpectrumMethod method,
                   std::vector<double> eigenvalues, Matrix eigenfunctions)
    : grid_(std::move(grid)), kernel_(kernel), method_(method),
      eigenvalues_(std::move(eigenvalues)),
      eigenfunctions_(std::move(eigenfunctions)) {
  if (eigenvalues_.empty())
    throw std::invalid_argument("Spectrum: no modes");
  if (eigenfunctions_.rows() != grid_.size() ||
      eigenfunctions_.cols() != eigenvalues_.size())
    throw std::invalid_argument("Spectrum: eigenfunction matrix shape mismatch");
  for (std::size_t i = 1; i < eigenvalues_.size(); ++i)
    if (eigenvalues_[i] > eigenvalues_[i - 1])
      throw std::invalid_argument("Spectrum: eigenvalues must be descending");
}

std::vector<double> Spectrum::eigenfunction_nodes(std::size_t i) const {
  if (i >= mode_count())
    throw std::invalid_argument("Spectrum: mode index out of range");
  std::vector<double> out(grid_.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = eigenfunctions_(j, i);
  return out;
}

std::size_t Spectrum::usable_modes() const {
  const double floor = kModeCutoff * eigenvalues_.front();
  std::size_t count = 0;
  while (count < eigenvalues_.size() && eigenvalues_[count] > floor)
    ++count;
  return count;
}

void Spectrum::set_analytic_modes(std::vector<AnalyticMode> modes) {
  if (modes.size() != eigenvalues_.size())
    throw std::invalid_argument("Spectrum: analytic mode count mismatch");
  analytic_ = std::move(modes);
}

double Spectrum::eigenfunction_value(std::size_t i, double t) const {
  if (i >= mode_count())
    throw std::invalid_argument("Spectrum: mode index out of range");
  if (t < grid_.domain().a || t > grid_.domain().b)
    throw std::invalid_argument("Spectrum: evaluation point outside domain");
  if (!analytic_.empty()) {
    const auto &m = analytic_[i];
    const double arg = m.omega * (t - grid_.domain().midpoint());
    return m.scale * (m.even ? std::cos(arg) : std::sin(arg));
  }
  const double lambda = eigenvalues_[i];
  if (lambda <= kModeCutoff * eigenvalues_.front())
    throw std::invalid_argument(
        "Spectrum: cannot interpolate through a numerically zero mode");
  const auto &nodes = grid_.nodes();
  const auto &w = grid_.weights();
  double acc = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j)
    acc += w[j] * kernel_(t, nodes[j]) * eigenfunctions_(j, i);
  return acc / lambda;
}

Spectrum nystrom_spectrum(const Kernel &kernel, const Grid &grid,
                          std::size_t n_modes) {
  const std::size_t n = grid.size();
  if (n_modes == 0 || n_modes > n)
    throw std::invalid_argument("nystrom_spectrum: need 1 <= n_modes <= grid size");

  Matrix b = kernel_matrix(kernel, grid);
  const auto &w = grid.weights();
  std::vector<double> sqw(n);
  for (std::size_t i = 0; i < n; ++i)
    sqw[i] = std::sqrt(w[i]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      b(i, j) *= sqw[i] * sqw[j];

  EigenDecomposition eig = symmetric_eigen(b);

  std::vector<double> values(eig.values.begin(), eig.values.begin() + n_modes);
  Matrix funcs(n, n_modes);
  for (std::size_t j = 0; j < n; ++j) {
    const double inv = 1.0 / sqw[j];
    for (std::size_t i = 0; i < n_modes; ++i)
      funcs(j, i) = eig.vectors(j, i) * inv;
  }
  for (std::size_t i = 0; i < n_modes; ++i)
    fix_sign(funcs, i);
  return Spectrum(grid, kernel, SpectrumMethod::Nystrom, std::move(values),
                  std::move(funcs));
}

namespace {

// Characteristic functions of the exponential kernel on [-T, T], written in
// the singularity-free product form so each tangent branch brackets exactly
// one root with a sign change at the branch ends.
double even_char(double omega, double c, double half) {
  return c * std::cos(omega * half) - omega * std::sin(omega * half);
}

double odd_char(double omega, double c, double half) {
  return omega * std::cos(omega * half) + c * std::sin(omega * half);
}

double bisect_root(double lo, double hi, double c, double half, bool even) {
  auto f = [&](double x) {
    return even ? even_char(x, c, half) : odd_char(x, c, half);
  };
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0)
    return lo;
  if (fhi == 0.0)
    return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw NumericError("analytic_spectrum_exponential: root bracket lost");
  while (hi - lo > 1e-13 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    const double fm = f(mid);
    if (fm == 0.0)
      return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace

Spectrum analytic_spectrum_exponential(const Kernel &kernel, const Grid &grid,
                                       std::size_t n_modes) {
  if (kernel.kind() != KernelKind::Exponential)
    throw std::invalid_argument(
        "analytic_spectrum_exponential: kernel must be exponential");
  const std::size_t n = grid.size();
  if (n_modes == 0)
    throw std::invalid_argument("analytic_spectrum_exponential: need n_modes >= 1");

  const Domain &dom = grid.domain();
  const double half = 0.5 * dom.length();
  const double mid = dom.midpoint();
  const double c = 1.0 / kernel.corr_len();
  const double pi = std::numbers::pi;

  struct Root {
    double omega;
    bool even;
  };
  std::vector<Root> roots;
  const std::size_t per_kind = n_modes / 2 + 2;
  // even roots: one in (0, pi/(2T)), then one per tangent branch
  roots.push_back({bisect_root(1e-30, 0.5 * pi / half, c, half, true), true});
  for (std::size_t k = 1; k < per_kind; ++k) {
    const double lo = (k - 0.5) * pi / half;
    const double hi = (k + 0.5) * pi / half;
    roots.push_back({bisect_root(lo, hi, c, half, true), true});
    roots.push_back({bisect_root(lo, hi, c, half, false), false});
  }
  std::sort(roots.begin(), roots.end(),
            [](const Root &x, const Root &y) { return x.omega < y.omega; });
  if (roots.size() < n_modes)
    throw NumericError("analytic_spectrum_exponential: not enough roots found");
  roots.resize(n_modes);

  const auto &nodes = grid.nodes();
  std::vector<double> values(n_modes);
  Matrix funcs(n, n_modes);
  std::vector<Spectrum::AnalyticMode> modes(n_modes);
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n_modes; ++i) {
    const double omega = roots[i].omega;
    values[i] = 2.0 * c * kernel.sigma2() / (omega * omega + c * c);
    for (std::size_t j = 0; j < n; ++j) {
      const double arg = omega * (nodes[j] - mid);
      col[j] = roots[i].even ? std::cos(arg) : std::sin(arg);
    }
    const double norm = std::sqrt(inner_product(grid, col, col));
    double scale = 1.0 / norm;
    // sign convention: first nonzero node value positive
    for (std::size_t j = 0; j < n; ++j) {
      if (col[j] != 0.0) {
        if (col[j] < 0.0)
          scale = -scale;
        break;
      }
    }
    for (std::size_t j = 0; j < n; ++j)
      funcs(j, i) = scale * col[j];
    modes[i] = {omega, roots[i].even, scale};
  }

  Spectrum spectrum(grid, kernel, SpectrumMethod::Analytic, std::move(values),
                    std::move(funcs));
  spectrum.set_analytic_modes(std::move(modes));
  return spectrum;
}

std::size_t mode_count_for_energy(const Spectrum &spectrum, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("mode_count_for_energy: fraction must be in (0,1]");
  const auto &lambda = spectrum.eigenvalues();
  const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    acc += lambda[i];
    if (acc >= fraction * total)
      return i + 1;
  }
  return lambda.size();
}

} // namespace klf
