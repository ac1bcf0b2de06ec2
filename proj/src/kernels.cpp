#include "kernels.hpp"

#include "quadrature.hpp"

namespace klf {

Matrix kernel_matrix(const Kernel &kernel, const Grid &grid) {
  const auto &t = grid.nodes();
  const std::size_t n = t.size();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = kernel(t[i], t[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = kernel(t[i], t[j]);
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

} // namespace klf
