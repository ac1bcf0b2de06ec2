#include <doctest.h>

#include <cmath>
#include <random>

#include "kernels.hpp"
#include "quadrature.hpp"
#include "spectral.hpp"

using namespace klf;

TEST_CASE("exponential kernel closed form") {
  Kernel k(KernelKind::Exponential, 1.0, 1.0);
  CHECK(k(0.3, 0.3) == 1.0);
  CHECK(k(0.0, 0.0) == 1.0);
  CHECK(k(0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  // exponential values never leave [0, sigma2]
  CHECK(k(0.0, 100.0) >= 0.0);
  CHECK(k(0.0, 100.0) <= 1.0);
}

TEST_CASE("squared-exponential kernel closed form") {
  Kernel k(KernelKind::SquaredExponential, 2.0, 0.5);
  CHECK(k(0.4, 0.4) == 2.0);
  CHECK(k(0.0, 0.5) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-14));
}

TEST_CASE("invalid kernel parameters rejected at construction") {
  CHECK_THROWS_AS(Kernel(KernelKind::Exponential, -1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(Kernel(KernelKind::Exponential, 1.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(Kernel(KernelKind::Exponential, 1.0, -2.0),
                  std::invalid_argument);
}

TEST_CASE("domain requires a < b") {
  CHECK_THROWS_AS(Domain(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Domain(2.0, 1.0), std::invalid_argument);
}

TEST_CASE("kernel symmetry and diagonal are exact") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto kind :
       {KernelKind::Exponential, KernelKind::SquaredExponential}) {
    Kernel k(kind, 1.7, 0.3);
    for (int rep = 0; rep < 1000; ++rep) {
      const double s = u(rng), t = u(rng);
      CHECK(k(s, t) == k(t, s));
      CHECK(k(t, t) == 1.7);
    }
  }
}

TEST_CASE("kernel matrix matches direct evaluation") {
  Kernel k(KernelKind::Exponential, 1.0, 1.0);
  Grid g2 = make_grid(Domain(0.0, 1.0), 2, QuadratureRule::Trapezoid);
  Matrix a = kernel_matrix(k, g2);
  CHECK(a(0, 0) == 1.0);
  CHECK(a(1, 1) == 1.0);
  CHECK(a(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  Grid g101 = make_grid(Domain(0.0, 1.0), 101, QuadratureRule::Trapezoid);
  Matrix b = kernel_matrix(k, g101);
  for (std::size_t i = 0; i < b.rows(); ++i)
    CHECK(b(i, i) == 1.0);
}

TEST_CASE("kernel matrix is bitwise symmetric") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> nodes(23);
  for (auto &x : nodes)
    x = u(rng);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  Grid g(Domain(0.0, 1.0), nodes, std::vector<double>(nodes.size(), 0.01),
         QuadratureRule::Trapezoid);
  Kernel k(KernelKind::SquaredExponential, 0.9, 0.2);
  Matrix a = kernel_matrix(k, g);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      CHECK(a(i, j) == a(j, i));
}

TEST_CASE("kernel matrices are positive semidefinite at sample scale") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto kind :
       {KernelKind::Exponential, KernelKind::SquaredExponential}) {
    const double sigma2 = 1.3;
    Kernel k(kind, sigma2, 0.4);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> nodes;
      while (nodes.size() < 40) {
        const double x = u(rng);
        nodes.push_back(x);
      }
      std::sort(nodes.begin(), nodes.end());
      nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
      Grid g(Domain(0.0, 1.0), nodes, std::vector<double>(nodes.size(), 1.0),
             QuadratureRule::Trapezoid);
      const auto eig = symmetric_eigen(kernel_matrix(k, g));
      CHECK(eig.values.back() >= -1e-10 * sigma2);
    }
  }
}
