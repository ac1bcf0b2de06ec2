// klfield command-line front end: eigs, mercer, sample, verify, figures.
// Loads one JSON config, runs the library through its C API, and writes
// CSV/JSON artifacts. Exit codes: 0 success, 1 statistical flag tripped,
// 2 config/usage error, 3 numeric failure.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "klfield/klfield.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError {
  int code; // process exit code
  std::string message;
};

[[noreturn]] void die(int code, std::string message) {
  throw CliError{code, std::move(message)};
}

void check_api(int rc, const char *context) {
  if (rc == KLF_OK)
    return;
  const int exit_code = (rc == KLF_ERR_NUMERIC) ? 3 : 2;
  die(exit_code, std::string(context) + ": " + klf_last_error());
}

// Shortest decimal form that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct RunConfig {
  std::string kernel_kind = "exponential";
  double sigma2 = 1.0;
  double corr_len = 1.0;
  double domain_a = 0.0;
  double domain_b = 1.0;
  std::string rule = "trapezoid";
  std::size_t grid_n = 500;
  std::string method = "nystrom";
  std::size_t n_modes = 100;
  std::size_t n_truncation = 6;
  std::size_t samples = 20000;
  std::uint64_t seed = 20240501;
  std::string output_dir = "klfield_out";
  std::size_t eval_n = 101;
  bool surface = false;
};

void reject_unknown(const json &obj, std::initializer_list<const char *> known,
                    const std::string &where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char *k : known)
      if (it.key() == k)
        ok = true;
    if (!ok)
      die(2, "config: unknown key \"" + it.key() + "\" in " + where);
  }
}

void parse_domain(const json &arr, double &a, double &b,
                  const std::string &where) {
  if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number() ||
      !arr[1].is_number())
    die(2, "config: " + where + " domain must be [a, b]");
  a = arr[0].get<double>();
  b = arr[1].get<double>();
  if (!(a < b))
    die(2, "config: " + where + " domain requires a < b");
}

RunConfig load_config(const std::string &path) {
  RunConfig cfg;
  if (path.empty())
    return cfg;
  std::ifstream in(path);
  if (!in)
    die(2, "config: cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const std::exception &e) {
    die(2, std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object())
    die(2, "config: top level must be an object");
  reject_unknown(root,
                 {"kernel", "grid", "method", "n_modes", "n_truncation",
                  "samples", "seed", "output_dir", "eval_n", "surface"},
                 "top level");

  bool kernel_domain_set = false;
  if (root.contains("kernel")) {
    const json &k = root["kernel"];
    if (!k.is_object())
      die(2, "config: kernel must be an object");
    reject_unknown(k, {"kind", "sigma2", "corr_len", "domain"}, "kernel");
    if (k.contains("kind"))
      cfg.kernel_kind = k["kind"].get<std::string>();
    if (k.contains("sigma2"))
      cfg.sigma2 = k["sigma2"].get<double>();
    if (k.contains("corr_len"))
      cfg.corr_len = k["corr_len"].get<double>();
    if (k.contains("domain")) {
      parse_domain(k["domain"], cfg.domain_a, cfg.domain_b, "kernel");
      kernel_domain_set = true;
    }
  }
  if (root.contains("grid")) {
    const json &g = root["grid"];
    if (!g.is_object())
      die(2, "config: grid must be an object");
    reject_unknown(g, {"rule", "n", "domain"}, "grid");
    if (g.contains("rule"))
      cfg.rule = g["rule"].get<std::string>();
    if (g.contains("n"))
      cfg.grid_n = g["n"].get<std::size_t>();
    if (g.contains("domain")) {
      double a = 0.0, b = 0.0;
      parse_domain(g["domain"], a, b, "grid");
      if (kernel_domain_set && (a != cfg.domain_a || b != cfg.domain_b))
        die(2, "config: kernel and grid domains disagree");
      cfg.domain_a = a;
      cfg.domain_b = b;
    }
  }
  if (root.contains("method"))
    cfg.method = root["method"].get<std::string>();
  if (root.contains("n_modes"))
    cfg.n_modes = root["n_modes"].get<std::size_t>();
  if (root.contains("n_truncation"))
    cfg.n_truncation = root["n_truncation"].get<std::size_t>();
  if (root.contains("samples"))
    cfg.samples = root["samples"].get<std::size_t>();
  if (root.contains("seed"))
    cfg.seed = root["seed"].get<std::uint64_t>();
  if (root.contains("output_dir"))
    cfg.output_dir = root["output_dir"].get<std::string>();
  if (root.contains("eval_n"))
    cfg.eval_n = root["eval_n"].get<std::size_t>();
  if (root.contains("surface"))
    cfg.surface = root["surface"].get<bool>();

  if (cfg.kernel_kind != "exponential" &&
      cfg.kernel_kind != "squared_exponential")
    die(2, "config: kernel kind must be exponential or squared_exponential");
  if (cfg.rule != "trapezoid" && cfg.rule != "gauss_legendre")
    die(2, "config: grid rule must be trapezoid or gauss_legendre");
  if (cfg.method != "nystrom" && cfg.method != "analytic")
    die(2, "config: method must be nystrom or analytic");
  if (cfg.grid_n < 2)
    die(2, "config: grid n must be >= 2");
  if (cfg.n_modes == 0 || cfg.n_truncation == 0 || cfg.samples == 0)
    die(2, "config: n_modes, n_truncation, and samples must be positive");
  if (cfg.n_truncation > cfg.n_modes)
    die(2, "config: n_truncation must not exceed n_modes");
  if (cfg.n_modes > cfg.grid_n)
    die(2, "config: n_modes must not exceed grid n");
  if (cfg.eval_n < 2)
    die(2, "config: eval_n must be >= 2");
  return cfg;
}

json config_json(const RunConfig &cfg) {
  return json{
      {"kernel",
       {{"kind", cfg.kernel_kind},
        {"sigma2", cfg.sigma2},
        {"corr_len", cfg.corr_len},
        {"domain", {cfg.domain_a, cfg.domain_b}}}},
      {"grid", {{"rule", cfg.rule}, {"n", cfg.grid_n}}},
      {"method", cfg.method},
      {"n_modes", cfg.n_modes},
      {"n_truncation", cfg.n_truncation},
      {"samples", cfg.samples},
      {"seed", cfg.seed},
      {"eval_n", cfg.eval_n}};
}

// RAII wrappers over the C handles
using KernelPtr = std::unique_ptr<klf_kernel, decltype(&klf_kernel_free)>;
using GridPtr = std::unique_ptr<klf_grid, decltype(&klf_grid_free)>;
using SpectrumPtr = std::unique_ptr<klf_spectrum, decltype(&klf_spectrum_free)>;
using BatchPtr = std::unique_ptr<klf_batch, decltype(&klf_batch_free)>;

KernelPtr make_kernel(const RunConfig &cfg) {
  klf_kernel *raw = nullptr;
  const int kind = (cfg.kernel_kind == "exponential")
                       ? KLF_KERNEL_EXPONENTIAL
                       : KLF_KERNEL_SQUARED_EXPONENTIAL;
  check_api(klf_kernel_create(kind, cfg.sigma2, cfg.corr_len, &raw), "kernel");
  return KernelPtr(raw, klf_kernel_free);
}

GridPtr make_grid(const RunConfig &cfg) {
  klf_grid *raw = nullptr;
  const int rule = (cfg.rule == "trapezoid") ? KLF_RULE_TRAPEZOID
                                             : KLF_RULE_GAUSS_LEGENDRE;
  check_api(
      klf_grid_create(cfg.domain_a, cfg.domain_b, cfg.grid_n, rule, &raw),
      "grid");
  return GridPtr(raw, klf_grid_free);
}

SpectrumPtr make_spectrum(const RunConfig &cfg, const klf_kernel *kernel,
                          const klf_grid *grid) {
  klf_spectrum *raw = nullptr;
  if (cfg.method == "analytic")
    check_api(
        klf_spectrum_analytic_exponential(kernel, grid, cfg.n_modes, &raw),
        "spectrum");
  else
    check_api(klf_spectrum_nystrom(kernel, grid, cfg.n_modes, &raw),
              "spectrum");
  return SpectrumPtr(raw, klf_spectrum_free);
}

fs::path prepare_output_dir(const RunConfig &cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    die(2, "output: cannot create directory " + dir.string());
  return dir;
}

std::ofstream open_output(const fs::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    die(2, "output: cannot write " + path.string());
  return out;
}

void write_json(const fs::path &path, const json &doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

std::vector<double> grid_nodes(const klf_grid *grid) {
  std::vector<double> nodes(klf_grid_size(grid));
  check_api(klf_grid_nodes(grid, nodes.data()), "grid nodes");
  return nodes;
}

// ---- subcommands ----

void run_eigs(const RunConfig &cfg) {
  const auto dir = prepare_output_dir(cfg);
  const auto kernel = make_kernel(cfg);
  const auto grid = make_grid(cfg);
  const auto spectrum = make_spectrum(cfg, kernel.get(), grid.get());

  const auto nodes = grid_nodes(grid.get());
  const std::size_t modes = klf_spectrum_mode_count(spectrum.get());
  std::vector<double> values(modes);
  check_api(klf_spectrum_eigenvalues(spectrum.get(), values.data()),
            "eigenvalues");

  auto csv = open_output(dir / "eigs.csv");
  csv << "mode_index,eigenvalue";
  for (const double t : nodes)
    csv << ',' << fmt(t);
  csv << '\n';
  std::vector<double> column(nodes.size());
  for (std::size_t i = 0; i < modes; ++i) {
    check_api(
        klf_spectrum_eigenfunction_nodes(spectrum.get(), i, column.data()),
        "eigenfunction");
    csv << (i + 1) << ',' << fmt(values[i]);
    for (const double v : column)
      csv << ',' << fmt(v);
    csv << '\n';
  }

  json sidecar = config_json(cfg);
  sidecar["tolerances"] = {{"orthonormality", 1e-8},
                           {"eigen_residual_rel", 1e-8},
                           {"root_bisection", 1e-13}};
  write_json(dir / "eigs.json", sidecar);
}

void run_mercer(const RunConfig &cfg) {
  const auto dir = prepare_output_dir(cfg);
  const auto kernel = make_kernel(cfg);
  const auto grid = make_grid(cfg);
  const auto spectrum = make_spectrum(cfg, kernel.get(), grid.get());

  std::vector<double> sup(cfg.n_truncation);
  double l2 = 0.0;
  check_api(klf_mercer_report(spectrum.get(), cfg.n_truncation, cfg.eval_n,
                              sup.data(), &l2),
            "mercer report");

  auto csv = open_output(dir / "mercer_curve.csv");
  csv << "N,max_abs_error\n";
  for (std::size_t i = 0; i < sup.size(); ++i)
    csv << (i + 1) << ',' << fmt(sup[i]) << '\n';

  if (cfg.surface) {
    auto surf = open_output(dir / "mercer_surface.csv");
    surf << "s,t,r_exact,r_truncated,difference\n";
    const double h =
        (cfg.domain_b - cfg.domain_a) / static_cast<double>(cfg.eval_n - 1);
    for (std::size_t p = 0; p < cfg.eval_n; ++p) {
      const double s =
          (p == cfg.eval_n - 1) ? cfg.domain_b : cfg.domain_a + h * p;
      for (std::size_t q = 0; q < cfg.eval_n; ++q) {
        const double t =
            (q == cfg.eval_n - 1) ? cfg.domain_b : cfg.domain_a + h * q;
        double exact = 0.0, trunc = 0.0;
        check_api(klf_kernel_eval(kernel.get(), s, t, &exact), "kernel eval");
        check_api(
            klf_mercer_eval(spectrum.get(), cfg.n_truncation, s, t, &trunc),
            "mercer eval");
        surf << fmt(s) << ',' << fmt(t) << ',' << fmt(exact) << ','
             << fmt(trunc) << ',' << fmt(exact - trunc) << '\n';
      }
    }
  }

  json sidecar = config_json(cfg);
  sidecar["max_abs_error"] = sup.back();
  sidecar["l2_error"] = l2;
  write_json(dir / "mercer.json", sidecar);
}

void write_samples_csv(const fs::path &path, const std::vector<double> &nodes,
                       const std::vector<double> &fields, std::size_t m) {
  auto csv = open_output(path);
  for (std::size_t j = 0; j < nodes.size(); ++j)
    csv << (j ? "," : "") << fmt(nodes[j]);
  csv << '\n';
  for (std::size_t r = 0; r < m; ++r) {
    const double *row = fields.data() + r * nodes.size();
    for (std::size_t j = 0; j < nodes.size(); ++j)
      csv << (j ? "," : "") << fmt(row[j]);
    csv << '\n';
  }
}

void run_sample(const RunConfig &cfg) {
  const auto dir = prepare_output_dir(cfg);
  const auto kernel = make_kernel(cfg);
  const auto grid = make_grid(cfg);
  const auto spectrum = make_spectrum(cfg, kernel.get(), grid.get());

  klf_batch *raw = nullptr;
  check_api(klf_sample(spectrum.get(), cfg.n_truncation, cfg.samples, cfg.seed,
                       &raw),
            "sample");
  BatchPtr batch(raw, klf_batch_free);

  const auto nodes = grid_nodes(grid.get());
  std::vector<double> fields(cfg.samples * nodes.size());
  check_api(klf_batch_fields(batch.get(), fields.data()), "fields");
  write_samples_csv(dir / "samples.csv", nodes, fields, cfg.samples);

  json manifest = config_json(cfg);
  manifest["realizations"] = cfg.samples;
  write_json(dir / "sample_manifest.json", manifest);
}

// Runs the statistics battery on a fresh batch; returns the verify report
// and whether any statistical flag tripped.
json verify_report(const RunConfig &cfg, const klf_spectrum *spectrum,
                   bool &flagged) {
  if (cfg.samples < 2)
    die(2, "verify: need at least 2 samples");
  klf_batch *raw = nullptr;
  check_api(
      klf_sample(spectrum, cfg.n_truncation, cfg.samples, cfg.seed, &raw),
      "sample");
  BatchPtr batch(raw, klf_batch_free);

  const std::size_t n_modes = cfg.n_truncation;
  std::vector<double> means(n_modes), variances(n_modes),
      correlation(n_modes * n_modes);
  check_api(klf_coefficient_stats(batch.get(), means.data(), variances.data(),
                                  correlation.data(), nullptr),
            "coefficient stats");

  const double m = static_cast<double>(cfg.samples);
  const double mean_tol = 4.0 / std::sqrt(m);
  const double var_tol = 4.0 * std::sqrt(2.0 / m);
  json mean_flags = json::array(), var_flags = json::array(),
       corr_flags = json::array();
  flagged = false;
  for (std::size_t i = 0; i < n_modes; ++i) {
    const bool mf = std::abs(means[i]) > mean_tol;
    const bool vf = std::abs(variances[i] - 1.0) > var_tol;
    mean_flags.push_back(mf);
    var_flags.push_back(vf);
    flagged = flagged || mf || vf;
    for (std::size_t j = i + 1; j < n_modes; ++j)
      if (std::abs(correlation[i * n_modes + j]) > mean_tol) {
        corr_flags.push_back({i + 1, j + 1});
        flagged = true;
      }
  }

  double sup_trunc = 0.0, sup_exact = 0.0;
  check_api(klf_covariance_errors(batch.get(), &sup_trunc, &sup_exact),
            "covariance");
  const double cov_envelope = 5.0 * std::sqrt(2.0 / m) * cfg.sigma2;
  const bool cov_flag = sup_trunc > cov_envelope;
  flagged = flagged || cov_flag;

  const double t_mid = 0.5 * (cfg.domain_a + cfg.domain_b);
  double ks_stat = 0.0, ks_threshold = 0.0;
  check_api(klf_marginal_ks(batch.get(), t_mid, &ks_stat, &ks_threshold),
            "marginal normality");
  const bool ks_flag = ks_stat > ks_threshold;
  flagged = flagged || ks_flag;

  json report = config_json(cfg);
  report["coefficients"] = {{"means", means},
                            {"variances", variances},
                            {"correlation", correlation},
                            {"mean_tolerance", mean_tol},
                            {"variance_tolerance", var_tol},
                            {"mean_flags", mean_flags},
                            {"variance_flags", var_flags},
                            {"correlation_flags", corr_flags}};
  report["covariance"] = {{"sup_error_truncated", sup_trunc},
                          {"sup_error_exact", sup_exact},
                          {"envelope", cov_envelope},
                          {"flag", cov_flag}};
  report["marginal_normality"] = {{"t", t_mid},
                                  {"ks_statistic", ks_stat},
                                  {"ks_threshold", ks_threshold},
                                  {"flag", ks_flag}};
  report["pass"] = !flagged;
  return report;
}

int run_verify(const RunConfig &cfg) {
  const auto dir = prepare_output_dir(cfg);
  const auto kernel = make_kernel(cfg);
  const auto grid = make_grid(cfg);
  const auto spectrum = make_spectrum(cfg, kernel.get(), grid.get());
  bool flagged = false;
  const json report = verify_report(cfg, spectrum.get(), flagged);
  write_json(dir / "verify.json", report);
  return flagged ? 1 : 0;
}

int run_figures(const RunConfig &cfg) {
  const auto dir = prepare_output_dir(cfg);
  run_eigs(cfg);
  {
    RunConfig mc = cfg;
    mc.surface = true;
    mc.n_truncation = std::max<std::size_t>(cfg.n_truncation, 8);
    run_mercer(mc);
  }
  {
    // a few realizations for plotting; the statistics run separately below
    RunConfig sc = cfg;
    sc.samples = 10;
    run_sample(sc);
  }

  const auto kernel = make_kernel(cfg);
  const auto grid = make_grid(cfg);
  const auto spectrum = make_spectrum(cfg, kernel.get(), grid.get());

  // marginal values at the domain midpoint, one per realization
  {
    const std::size_t m_marginal = 10000;
    klf_batch *raw = nullptr;
    check_api(klf_sample(spectrum.get(), cfg.n_truncation, m_marginal,
                         cfg.seed, &raw),
              "sample");
    BatchPtr batch(raw, klf_batch_free);
    const double t_mid = 0.5 * (cfg.domain_a + cfg.domain_b);
    std::vector<double> values(klf_spectrum_mode_count(spectrum.get()));
    check_api(klf_spectrum_eigenvalues(spectrum.get(), values.data()),
              "eigenvalues");
    std::vector<double> e_mid(cfg.n_truncation);
    for (std::size_t i = 0; i < cfg.n_truncation; ++i)
      check_api(klf_spectrum_eigenfunction_eval(spectrum.get(), i, t_mid,
                                                &e_mid[i]),
                "eigenfunction");
    std::vector<double> xi(m_marginal * cfg.n_truncation);
    check_api(klf_batch_xi(batch.get(), xi.data()), "xi");
    auto csv = open_output(dir / "marginal.csv");
    csv << "x\n";
    for (std::size_t r = 0; r < m_marginal; ++r) {
      double acc = 0.0;
      for (std::size_t i = 0; i < cfg.n_truncation; ++i)
        acc += std::sqrt(values[i]) * xi[r * cfg.n_truncation + i] * e_mid[i];
      csv << fmt(acc) << '\n';
    }
  }

  // two fixed realizations at successively larger truncation orders
  {
    std::vector<std::size_t> orders{2, 6, 20, 50};
    while (!orders.empty() && orders.back() > cfg.n_modes)
      orders.pop_back();
    if (orders.empty())
      orders.push_back(cfg.n_truncation);
    const auto nodes = grid_nodes(grid.get());
    auto csv = open_output(dir / "refinement.csv");
    csv << "realization,N";
    for (const double t : nodes)
      csv << ',' << fmt(t);
    csv << '\n';
    std::vector<double> curves(orders.size() * nodes.size());
    for (std::uint64_t rz = 0; rz < 2; ++rz) {
      check_api(klf_refinement(spectrum.get(), orders.data(), orders.size(),
                               cfg.seed + rz, nodes.data(), nodes.size(),
                               curves.data()),
                "refinement");
      for (std::size_t r = 0; r < orders.size(); ++r) {
        csv << (rz + 1) << ',' << orders[r];
        for (std::size_t j = 0; j < nodes.size(); ++j)
          csv << ',' << fmt(curves[r * nodes.size() + j]);
        csv << '\n';
      }
    }
  }

  bool flagged = false;
  const json report = verify_report(cfg, spectrum.get(), flagged);
  write_json(dir / "verify.json", report);
  return flagged ? 1 : 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Karhunen-Loeve expansion toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir_override;
  std::uint64_t seed_override = 0;
  bool seed_overridden = false;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("config", config_path, "JSON run configuration");
    sub->add_option("--output-dir", output_dir_override,
                    "override the config output directory");
    sub->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string &) { seed_overridden = true; });
  };

  CLI::App *eigs = app.add_subcommand("eigs", "eigenvalue/eigenfunction CSV");
  CLI::App *mercer =
      app.add_subcommand("mercer", "truncated kernel reconstruction errors");
  CLI::App *sample = app.add_subcommand("sample", "draw KL realizations");
  CLI::App *verify =
      app.add_subcommand("verify", "statistical verification report");
  CLI::App *figures = app.add_subcommand(
      "figures", "chain eigs+mercer+sample+verify with the classical defaults");
  for (CLI::App *sub : {eigs, mercer, sample, verify, figures})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0)
      return 0; // --help
    std::cerr << json{{"code", 2}, {"error", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!output_dir_override.empty())
      cfg.output_dir = output_dir_override;
    if (seed_overridden)
      cfg.seed = seed_override;

    if (eigs->parsed()) {
      run_eigs(cfg);
      return 0;
    }
    if (mercer->parsed()) {
      run_mercer(cfg);
      return 0;
    }
    if (sample->parsed()) {
      run_sample(cfg);
      return 0;
    }
    if (verify->parsed())
      return run_verify(cfg);
    return run_figures(cfg);
  } catch (const CliError &e) {
    std::cerr << json{{"code", e.code}, {"error", e.message}}.dump() << '\n';
    return e.code;
  } catch (const std::exception &e) {
    std::cerr << json{{"code", 2}, {"error", e.what()}}.dump() << '\n';
    return 2;
  }
}
