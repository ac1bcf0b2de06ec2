// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances are frozen; numbers in the messages are the
// measured values so a failure is diagnosable from the log alone.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "mercer.hpp"
#include "simulate.hpp"

namespace fs = std::filesystem;
using namespace klf;

namespace {

int g_failed = 0;

void report(int criterion, bool pass, const std::string &detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": "
            << detail << std::endl;
  if (!pass)
    ++g_failed;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

const Kernel kExp(KernelKind::Exponential, 1.0, 1.0);
const Domain kUnit(0.0, 1.0);

Spectrum nystrom(std::size_t n, std::size_t modes) {
  return nystrom_spectrum(kExp, make_grid(kUnit, n, QuadratureRule::Trapezoid),
                          modes);
}

} // namespace

int main() {
  // shared by criteria 1, 3, 4
  Spectrum sp500 = nystrom(500, 500);

  // 1: six-term Mercer truncation error on a 101x101 lattice
  {
    ReconstructionReport rep = reconstruction_report(sp500, kExp, 6, 101);
    report(1, rep.max_abs_error <= 8e-2,
           "Mercer N=6 sup error " + num(rep.max_abs_error) + " <= 8e-2");
  }

  // 2: analytic vs Nystrom eigenvalues, and Nystrom grid self-consistency
  {
    Grid g500 = make_grid(kUnit, 500, QuadratureRule::Trapezoid);
    Spectrum an = analytic_spectrum_exponential(kExp, g500, 10);
    double cross = 0.0;
    for (std::size_t i = 0; i < 10; ++i)
      cross = std::max(cross,
                       std::abs(an.eigenvalues()[i] - sp500.eigenvalues()[i]) /
                           sp500.eigenvalues()[i]);
    Spectrum n1000 = nystrom(1000, 10);
    Spectrum n2000 = nystrom(2000, 10);
    double self = 0.0;
    for (std::size_t i = 0; i < 10; ++i)
      self = std::max(self, std::abs(n1000.eigenvalues()[i] -
                                     n2000.eigenvalues()[i]) /
                                n2000.eigenvalues()[i]);
    report(2, cross <= 1e-3 && self <= 1e-4,
           "analytic-vs-Nystrom rel " + num(cross) +
               " <= 1e-3, n=1000-vs-2000 rel " + num(self) + " <= 1e-4");
  }

  // 3: trace identity, sum of eigenvalues = sigma2 (b - a)
  {
    double trace = 0.0;
    for (const double l : sp500.eigenvalues())
      trace += l;
    report(3, std::abs(trace - 1.0) <= 1e-6,
           "eigenvalue sum " + num(trace) + " within 1e-6 of 1");
  }

  // 4: orthonormality and operator residual of the first 50 modes
  {
    const Grid &g = sp500.grid();
    double orth = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
      const auto ei = sp500.eigenfunction_nodes(i);
      for (std::size_t j = i; j < 50; ++j) {
        const auto ej = sp500.eigenfunction_nodes(j);
        orth = std::max(orth, std::abs(inner_product(g, ei, ej) -
                                       (i == j ? 1.0 : 0.0)));
      }
    }
    const Matrix a = kernel_matrix(kExp, g);
    const auto &w = g.weights();
    double resid = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
      const auto e = sp500.eigenfunction_nodes(i);
      std::vector<double> r(g.size());
      for (std::size_t j = 0; j < g.size(); ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l < g.size(); ++l)
          acc += w[l] * a(j, l) * e[l];
        r[j] = acc - sp500.eigenvalues()[i] * e[j];
      }
      resid = std::max(resid, std::sqrt(inner_product(g, r, r)));
    }
    const double lim = 1e-8 * sp500.eigenvalues()[0];
    report(4, orth <= 1e-8 && resid <= lim,
           "orthonormality defect " + num(orth) + " <= 1e-8, residual " +
               num(resid) + " <= 1e-8 lambda_1");
  }

  // 5: monotone sup-error curve and full-rank reconstruction.
  // n = 501 puts every point of the 101-point lattice on a grid node, so
  // the full-rank check measures the spectral identity rather than the
  // off-node interpolation error of near-Nyquist modes.
  {
    Spectrum sp501 = nystrom(501, 501);
    ReconstructionReport curve = reconstruction_report(sp501, kExp, 8, 101);
    bool monotone = true;
    for (const std::size_t n : {4u, 6u, 8u})
      if (curve.per_n_curve[n - 1].second >
          curve.per_n_curve[n - 3].second + 1e-12)
        monotone = false;
    ReconstructionReport full =
        reconstruction_report(sp501, kExp, 501, 101);
    report(5, monotone && full.max_abs_error <= 1e-4,
           "sup errors nonincreasing over N=2,4,6,8; full-rank error " +
               num(full.max_abs_error) + " <= 1e-4");
  }

  // shared by criteria 6-9
  auto sp201 = std::make_shared<const Spectrum>(nystrom(201, 60));
  KLModel model(sp201, 6);
  const std::uint64_t seed = 20240501;

  // 6: normalized coefficient statistics at M = 2e4
  {
    SampleBatch batch = sample_batch(model, 20000, seed);
    CoefficientStats stats = coefficient_statistics(batch);
    double worst_mean = 0.0, worst_var = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      worst_mean = std::max(worst_mean, std::abs(stats.mean[i]));
      worst_var = std::max(worst_var, std::abs(stats.variance[i] - 1.0));
    }
    report(6, !stats.any_flag(),
           "M=2e4 seed " + std::to_string(seed) + ": max |mean| " +
               num(worst_mean) + " <= " + num(stats.mean_tolerance) +
               ", max |var-1| " + num(worst_var) + " <= " +
               num(stats.variance_tolerance) + ", correlations in envelope");
  }

  // 7: projection round-trip at M = 100
  {
    SampleBatch batch = sample_batch(model, 100, seed);
    double worst = 0.0;
    for (std::size_t m = 0; m < batch.count(); ++m) {
      const auto xi = project_coefficients(
          model,
          std::span<const double>(batch.fields.row(m), batch.fields.cols()));
      for (std::size_t i = 0; i < xi.size(); ++i)
        worst = std::max(worst, std::abs(xi[i] - batch.xi(m, i)));
    }
    report(7, worst <= 1e-8,
           "projection round-trip max error " + num(worst) + " <= 1e-8");
  }

  // 8: empirical covariance at M = 1e5 against both targets
  {
    SampleBatch batch = sample_batch(model, 100000, seed);
    CovarianceReport cov = empirical_covariance(batch);
    const double envelope = 5.0 * std::sqrt(2.0 / 100000.0);
    ReconstructionReport rep = reconstruction_report(*sp201, kExp, 6, 101);
    const double ratio = cov.sup_error_exact / rep.max_abs_error;
    report(8,
           cov.sup_error_truncated <= envelope && ratio >= 0.5 && ratio <= 2.0,
           "sup |C - R^N| " + num(cov.sup_error_truncated) + " <= " +
               num(envelope) + "; sup |C - R| " + num(cov.sup_error_exact) +
               " is " + num(ratio) + "x the N=6 Mercer sup error (in [0.5, 2])");
  }

  // 9: marginal normality at the midpoint, M = 1e4
  {
    SampleBatch batch = sample_batch(model, 10000, seed);
    KsReport ks = marginal_normality(batch, 0.5);
    report(9, ks.pass,
           "KS statistic " + num(ks.statistic) + " <= " + num(ks.threshold) +
               " at t=1/2, M=1e4");
  }

  // 10: byte-identical figures runs
  {
    const fs::path root =
        fs::temp_directory_path() /
        ("klfield_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(root);
    const fs::path cfg = root / "config.json";
    {
      std::ofstream out(cfg);
      out << R"({
  "kernel": {"kind": "exponential", "sigma2": 1.0, "corr_len": 1.0,
             "domain": [0.0, 1.0]},
  "grid": {"rule": "trapezoid", "n": 101},
  "n_modes": 20, "n_truncation": 6, "samples": 2000,
  "seed": 20240501, "eval_n": 41
})";
    }
    auto run = [&](const fs::path &out_dir) {
      const std::string cmd = std::string(KLFIELD_CLI_PATH) + " figures " +
                              cfg.string() + " --output-dir " +
                              out_dir.string() + " >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    const fs::path dir_a = root / "a", dir_b = root / "b";
    bool ok = run(dir_a) && run(dir_b);
    std::size_t files = 0;
    if (ok) {
      for (const auto &entry : fs::directory_iterator(dir_a)) {
        ++files;
        std::ifstream fa(entry.path(), std::ios::binary);
        std::ifstream fb(dir_b / entry.path().filename(), std::ios::binary);
        std::ostringstream ba, bb;
        ba << fa.rdbuf();
        bb << fb.rdbuf();
        if (!fb || ba.str() != bb.str()) {
          ok = false;
          break;
        }
      }
      ok = ok && files > 0;
    }
    report(10, ok,
           "two figures runs produced byte-identical outputs (" +
               std::to_string(files) + " files compared)");
    fs::remove_all(root);
  }

  if (g_failed == 0) {
    std::cout << "acceptance: all 10 criteria passed" << std::endl;
    return 0;
  }
  std::cout << "acceptance: " << g_failed << " criteria failed" << std::endl;
  return 1;
}
