#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "simulate.hpp"

using namespace klf;

namespace {

const Kernel kExp(KernelKind::Exponential, 1.0, 1.0);
const Domain kUnit(0.0, 1.0);

std::shared_ptr<const Spectrum> shared_spectrum(std::size_t n,
                                                std::size_t modes) {
  Grid g = make_grid(kUnit, n, QuadratureRule::Trapezoid);
  return std::make_shared<const Spectrum>(nystrom_spectrum(kExp, g, modes));
}

} // namespace

TEST_CASE("normal stream is deterministic and order-independent") {
  const auto a = standard_normal_stream(42, 1000);
  const auto b = standard_normal_stream(42, 1000);
  CHECK(a == b);
  // each draw depends only on its counter, not on how many came before
  for (const std::size_t k : {0u, 17u, 999u})
    CHECK(a[k] == normal_variate(42, 0, k));
  // distinct seeds decorrelate immediately
  const auto c = standard_normal_stream(43, 1000);
  CHECK(a != c);
  CHECK(standard_normal_stream(42, 0).empty());
}

TEST_CASE("normal stream passes CLT-scale moment checks at one million draws") {
  const std::size_t count = 1000000;
  const auto draws = standard_normal_stream(20240501, count);
  double mean = 0.0;
  for (const double x : draws)
    mean += x;
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (const double x : draws)
    var += (x - mean) * (x - mean);
  var /= static_cast<double>(count - 1);
  CHECK(std::abs(mean) <= 0.004);        // 4 / sqrt(M)
  CHECK(std::abs(var - 1.0) <= 0.006);   // 4 sqrt(2/M)
}

TEST_CASE("KL model validates its truncation order") {
  auto sp = shared_spectrum(101, 20);
  CHECK_NOTHROW(KLModel(sp, 20));
  CHECK_THROWS_AS(KLModel(sp, 0), std::invalid_argument);
  CHECK_THROWS_AS(KLModel(sp, 21), std::invalid_argument);
  CHECK_THROWS_AS(KLModel(nullptr, 1), std::invalid_argument);

  // rank-one kernel: only one usable mode no matter how many are stored
  Kernel constant(KernelKind::Exponential, 1.0, 1e12);
  Grid g = make_grid(kUnit, 41, QuadratureRule::Trapezoid);
  auto cs = std::make_shared<const Spectrum>(nystrom_spectrum(constant, g, 41));
  CHECK_NOTHROW(KLModel(cs, 1));
  CHECK_THROWS_AS(KLModel(cs, 2), std::invalid_argument);
}

TEST_CASE("truncated variance never exceeds the kernel diagonal") {
  auto sp = shared_spectrum(201, 30);
  KLModel model(sp, 30);
  for (const double t : {0.0, 0.25, 0.5, 0.75, 1.0})
    CHECK(model.variance_at(t) <= kExp(t, t) + 1e-8);
  const auto v = model.variance_at_nodes();
  CHECK(v.size() == 201);
  CHECK(v[100] == doctest::Approx(model.variance_at(0.5)).epsilon(1e-12));
}

TEST_CASE("sampling is bitwise deterministic across worker counts") {
  auto sp = shared_spectrum(101, 10);
  KLModel model(sp, 6);

  setenv("KLFIELD_THREADS", "1", 1);
  SampleBatch serial = sample_batch(model, 64, 7);
  setenv("KLFIELD_THREADS", "4", 1);
  SampleBatch parallel = sample_batch(model, 64, 7);
  unsetenv("KLFIELD_THREADS");

  CHECK(serial.xi == parallel.xi);
  CHECK(serial.fields == parallel.fields);

  SampleBatch again = sample_batch(model, 64, 7);
  CHECK(again.fields == serial.fields);
  SampleBatch other = sample_batch(model, 64, 8);
  CHECK(other.fields != serial.fields);

  CHECK_THROWS_AS(sample_batch(model, 0, 7), std::invalid_argument);
}

TEST_CASE("constant kernel yields spatially constant realizations") {
  Kernel constant(KernelKind::Exponential, 1.0, 1e12);
  Grid g = make_grid(kUnit, 41, QuadratureRule::Trapezoid);
  auto cs = std::make_shared<const Spectrum>(nystrom_spectrum(constant, g, 41));
  SampleBatch batch = sample_batch(KLModel(cs, 1), 10, 3);
  for (std::size_t m = 0; m < batch.count(); ++m) {
    const double *f = batch.fields.row(m);
    for (std::size_t j = 1; j < 41; ++j)
      CHECK(f[j] == doctest::Approx(f[0]).epsilon(1e-9));
  }
}

TEST_CASE("projection recovers the generating coefficients") {
  auto sp = shared_spectrum(201, 20);
  KLModel model(sp, 8);
  SampleBatch batch = sample_batch(model, 5, 11);
  for (std::size_t m = 0; m < batch.count(); ++m) {
    const auto xi = project_coefficients(
        model, std::span<const double>(batch.fields.row(m), 201));
    for (std::size_t i = 0; i < 8; ++i)
      CHECK(std::abs(xi[i] - batch.xi(m, i)) <= 1e-8);
  }

  // a pure sqrt(lambda_1) e_1 field projects onto (1, 0, ..., 0)
  std::vector<double> field = sp->eigenfunction_nodes(0);
  const double amp = std::sqrt(sp->eigenvalues()[0]);
  for (double &x : field)
    x *= amp;
  const auto xi = project_coefficients(model, field);
  CHECK(xi[0] == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t i = 1; i < 8; ++i)
    CHECK(std::abs(xi[i]) <= 1e-10);

  CHECK_THROWS_AS(project_coefficients(model, std::vector<double>(7, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("coefficient statistics on a well-behaved batch") {
  auto sp = shared_spectrum(101, 10);
  KLModel model(sp, 6);
  SampleBatch batch = sample_batch(model, 20000, 20240501);
  CoefficientStats stats = coefficient_statistics(batch);
  CHECK(stats.mean.size() == 6);
  CHECK(stats.mean_tolerance == doctest::Approx(4.0 / std::sqrt(20000.0)));
  CHECK(stats.variance_tolerance ==
        doctest::Approx(4.0 * std::sqrt(2.0 / 20000.0)));
  CHECK_FALSE(stats.any_flag());
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(std::abs(stats.mean[i]) <= stats.mean_tolerance);
    CHECK(std::abs(stats.variance[i] - 1.0) <= stats.variance_tolerance);
    CHECK(stats.correlation(i, i) == 1.0);
  }

  CHECK_THROWS_AS(coefficient_statistics(sample_batch(model, 1, 1)),
                  std::invalid_argument);
}

TEST_CASE("coefficient statistics flag a degenerate batch") {
  auto sp = shared_spectrum(101, 10);
  KLModel model(sp, 4);
  SampleBatch batch = sample_batch(model, 500, 1);
  // kill all randomness: xi identically zero has variance 0, far outside
  // the CLT envelope around 1
  batch.xi = Matrix(500, 4, 0.0);
  CoefficientStats stats = coefficient_statistics(batch);
  CHECK(stats.any_flag());
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(stats.variance_flag[i]);
}

TEST_CASE("empirical covariance converges to the truncated kernel") {
  auto sp = shared_spectrum(101, 10);
  KLModel model(sp, 6);
  SampleBatch batch = sample_batch(model, 20000, 20240501);
  CovarianceReport rep = empirical_covariance(batch);
  CHECK(rep.covariance.rows() == 101);
  // Monte Carlo error envelope: 4 sqrt(2/M) on unit-scale entries
  CHECK(rep.sup_error_truncated <= 4.0 * std::sqrt(2.0 / 20000.0));
  // the exact-kernel error is dominated by the truncation bias, which the
  // Monte Carlo noise cannot erase
  CHECK(rep.sup_error_exact > rep.sup_error_truncated);

  CHECK_THROWS_AS(empirical_covariance(sample_batch(model, 1, 1)),
                  std::invalid_argument);
}

TEST_CASE("marginal KS test accepts Gaussian fields and rejects uniforms") {
  auto sp = shared_spectrum(101, 10);
  KLModel model(sp, 6);
  SampleBatch batch = sample_batch(model, 10000, 20240501);

  KsReport ks = marginal_normality(batch, 0.5);
  CHECK(ks.sample_count == 10000);
  CHECK(ks.threshold == doctest::Approx(1.63 / 100.0));
  CHECK(ks.statistic <= ks.threshold);
  CHECK(ks.pass);

  // negative control: variance-matched uniform coefficients are not normal
  std::mt19937_64 rng(99);
  const double half = std::sqrt(3.0);
  std::uniform_real_distribution<double> u(-half, half);
  for (std::size_t m = 0; m < batch.count(); ++m)
    for (std::size_t i = 0; i < 6; ++i)
      batch.xi(m, i) = u(rng);
  KsReport bad = marginal_normality(batch, 0.5);
  CHECK_FALSE(bad.pass);
  CHECK(bad.statistic > bad.threshold);

  CHECK_THROWS_AS(marginal_normality(sample_batch(model, 99, 1), 0.5),
                  std::invalid_argument);
}

TEST_CASE("marginal variance at the midpoint matches the model") {
  auto sp = shared_spectrum(201, 10);
  KLModel model(sp, 6);
  const double v6 = model.variance_at(0.5);
  CHECK(v6 == doctest::Approx(0.960356).epsilon(1e-4)); // frozen

  SampleBatch batch = sample_batch(model, 20000, 20240501);
  const std::size_t mid = 100; // node at t = 0.5
  double second = 0.0;
  for (std::size_t m = 0; m < batch.count(); ++m) {
    const double x = batch.fields(m, mid);
    second += x * x;
  }
  second /= static_cast<double>(batch.count());
  // sample variance of X^2 for Gaussian X is 2 v^2; allow 3 standard errors
  const double se = v6 * std::sqrt(2.0 / 20000.0);
  CHECK(std::abs(second - v6) <= 3.0 * se);
}

TEST_CASE("refinement trajectories telescope over truncation orders") {
  auto sp = shared_spectrum(201, 30);
  const std::vector<double> ts{0.0, 0.25, 0.5, 0.75, 1.0};

  Matrix curves = refinement_trajectories(*sp, {2, 6, 20}, 5, ts);
  CHECK(curves.rows() == 3);
  CHECK(curves.cols() == 5);

  // repeating an order duplicates the row exactly
  Matrix twice = refinement_trajectories(*sp, {6, 6}, 5, ts);
  for (std::size_t p = 0; p < ts.size(); ++p)
    CHECK(twice(0, p) == twice(1, p));

  // row for order 6 equals row for order 2 plus modes 3..6
  KLModel model(sp, 20);
  std::vector<double> extra(ts.size(), 0.0);
  for (std::size_t i = 2; i < 6; ++i) {
    const double amp = std::sqrt(sp->eigenvalues()[i]) * normal_variate(5, 1, i);
    for (std::size_t p = 0; p < ts.size(); ++p)
      extra[p] += amp * sp->eigenfunction_value(i, ts[p]);
  }
  for (std::size_t p = 0; p < ts.size(); ++p)
    CHECK(std::abs(curves(1, p) - curves(0, p) - extra[p]) <= 1e-10);

  CHECK_THROWS_AS(refinement_trajectories(*sp, {6, 2}, 5, ts),
                  std::invalid_argument);
  CHECK_THROWS_AS(refinement_trajectories(*sp, {}, 5, ts),
                  std::invalid_argument);
  CHECK_THROWS_AS(refinement_trajectories(*sp, {31}, 5, ts),
                  std::invalid_argument);
}

TEST_CASE("normal CDF reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021).epsilon(1e-6));
  CHECK(normal_cdf(-1.96) == doctest::Approx(0.0249979).epsilon(1e-4));
}
