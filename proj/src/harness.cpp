#include "mixrate/harness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mixrate/analysis.hpp"
#include "mixrate/approx.hpp"
#include "mixrate/estimate.hpp"
#include "mixrate/kernels.hpp"
#include "mixrate/targets.hpp"

namespace mixrate::harness {

namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

struct RunContext {
  Config config;
  std::string kind;
  std::string out_dir;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string provenance;       // combined config+seed hash carried on rows
  std::string config_hash;
  kernels::KernelDensity kernel;
  targets::TargetDensity target;
  std::optional<analysis::QuadratureSpec> quad;
};

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + path + "'");
  out << content;
}

json provenance_json(const RunContext& ctx) {
  return json{{"config_hash", ctx.config_hash},
              {"master_seed", ctx.seed},
              {"seed_rule", "trial seed = derive_seed(master, row_index + 1, trial)"},
              {"combined", ctx.provenance}};
}

json report_json(const RateReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back(json{{"size", row.size},
                        {"nu", row.nu},
                        {"mean_error", row.mean_error},
                        {"std_error", row.std_error},
                        {"best_error", row.best_error},
                        {"bound", row.bound},
                        {"bound_certified", row.bound_certified},
                        {"bound_ok", row.bound_ok},
                        {"epsilon", row.epsilon},
                        {"trials", row.trials}});
  return json{{"experiment", r.experiment},
              {"verdict", verdict_name(r.verdict)},
              {"slope", r.fit.slope},
              {"intercept", r.fit.intercept},
              {"r_squared", r.fit.r_squared},
              {"fit_warnings", r.fit.warnings},
              {"theoretical_exponent", r.theoretical_exponent},
              {"slope_tolerance", r.slope_tolerance},
              {"constant_k", r.constant_k},
              {"constants_certified", r.constants_certified},
              {"fits_total", r.fits_total},
              {"fits_certified", r.fits_certified},
              {"decomposition_checked", r.decomposition_checked},
              {"decomposition_passed", r.decomposition_passed},
              {"notes", r.notes},
              {"rows", rows}};
}

std::string rate_summary(const RateReport& r) {
  std::ostringstream out;
  out << "experiment: " << r.experiment << "\n";
  out << "verdict: " << verdict_name(r.verdict) << "\n";
  out << "fitted slope: " << format_number(r.fit.slope) << " (theory "
      << format_number(r.theoretical_exponent) << ", tolerance "
      << format_number(r.slope_tolerance) << ", r^2 " << format_number(r.fit.r_squared)
      << ")\n";
  if (r.constant_k > 0.0)
    out << "bound constant K: " << format_number(r.constant_k)
        << (r.constants_certified ? " (asserted per row)" : " (reported only)") << "\n";
  if (r.fits_total > 0)
    out << "optimizer certificates: " << r.fits_certified << "/" << r.fits_total << "\n";
  if (r.decomposition_checked > 0)
    out << "risk decomposition checks: " << r.decomposition_passed << "/"
        << r.decomposition_checked << "\n";
  for (const auto& n : r.notes) out << "note: " << n << "\n";
  return out.str();
}

// --- builders -------------------------------------------------------------

kernels::KernelDensity build_kernel(const Config& cfg) {
  const std::string name = cfg.require_string("kernel", "name");
  const long dim = cfg.get_int("kernel", "dim", 1);
  if (dim < 1) throw ConfigError("[kernel] dim must be >= 1");
  kernels::KernelDensity kernel = kernels::make_kernel(name, static_cast<int>(dim));
  if (const auto vc = cfg.find_double("kernel", "vc_dim")) kernel.set_vc_dim(*vc);
  return kernel;
}

targets::TargetDensity build_target(const Config& cfg, int dim) {
  const std::string name = cfg.require_string("target", "name");
  targets::TargetParams params;
  params.sigma = cfg.get_double("target", "sigma", params.sigma);
  params.center = cfg.get_double("target", "center", params.center);
  params.weights = cfg.get_double_list("target", "weights");
  params.sigmas = cfg.get_double_list("target", "sigmas");
  params.centers = cfg.get_double_list("target", "centers");
  params.s = cfg.get_double("target", "s", params.s);
  params.csv_path = cfg.get_string("target", "path", "");
  return targets::make_target(name, dim, params);
}

std::optional<analysis::QuadratureSpec> build_quad(const Config& cfg, int dim) {
  if (!cfg.has_section("quadrature")) return std::nullopt;
  const std::string mode = cfg.get_string("quadrature", "mode", "tensor");
  const double bound = cfg.get_double("quadrature", "bound", 10.0);
  if (!(bound > 0.0)) throw ConfigError("[quadrature] bound must be positive");
  if (mode == "tensor") {
    const long fallback = dim == 1 ? 4096 : 256;
    const long pts = cfg.get_int("quadrature", "points_per_axis", fallback);
    if (pts < 16) throw ConfigError("[quadrature] points_per_axis must be >= 16");
    return analysis::QuadratureSpec::symmetric_box(dim, bound, static_cast<int>(pts));
  }
  if (mode == "monte_carlo") {
    const long samples = cfg.get_int("quadrature", "sample_count", 65536);
    const std::uint64_t qseed = cfg.get_u64("quadrature", "seed", 1);
    return analysis::QuadratureSpec::monte_carlo_box(dim, bound, samples, qseed);
  }
  throw ConfigError("[quadrature] mode must be 'tensor' or 'monte_carlo'; got '" + mode + "'");
}

// --- approx ---------------------------------------------------------------

RateReport run_greedy_rate(const RunContext& ctx, double p, double alpha,
                           const std::vector<std::size_t>& m_grid, long greedy_steps) {
  const auto& kernel = ctx.kernel;
  const auto& target = ctx.target;
  const int d = kernel.dim();
  const analysis::QuadratureSpec probe =
      ctx.quad ? *ctx.quad : analysis::default_quadrature(kernel, target, 1.0);
  const double k1 = kernels::kernel_moment(kernel, alpha, probe);
  const auto k2 = targets::resolve_k2(target, p, probe);
  if (!k2)
    throw UnsupportedTarget("target '" + target.name() +
                            "' has no usable smoothness constant for the greedy sweep");
  const double phi_p =
      kernel.lp_norm_hook(p).value_or(kernels::dilated_lp_norm(kernel, 1.0, p, probe));
  const double nu_front = approx::optimal_nu(m_grid.front(), p, alpha, d, k1, *k2, phi_p, 1.0);
  const analysis::QuadratureSpec quad =
      ctx.quad ? *ctx.quad
               : analysis::default_quadrature(kernel, target, std::min(1.0, nu_front));

  RateReport report;
  report.experiment = "approx_rate";
  report.theoretical_exponent = approx::rate_exponent(p, alpha, d);
  report.constant_k = approx::theorem_constant_k(p, alpha, d, k1, *k2, phi_p, 1.0);
  report.constants_certified = false;  // greedy carries no constructive guarantee
  report.notes.push_back("greedy construction; bound reported, not asserted");

  const analysis::PointFn target_fn = [&](std::span<const double> x) { return target(x); };
  for (std::size_t m : m_grid) {
    const double nu = approx::optimal_nu(m, p, alpha, d, k1, *k2, phi_p, 1.0);

    // Candidate lattice over the target bulk, about 4m points total.
    const double radius = target.axis_effective_radius();
    const std::size_t per_axis = static_cast<std::size_t>(std::ceil(
        std::pow(static_cast<double>(4 * m + 1), 1.0 / static_cast<double>(d))));
    std::vector<std::vector<double>> candidates;
    std::vector<std::size_t> digits(static_cast<std::size_t>(d), 0);
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= per_axis;
    for (std::size_t i = 0; i < total; ++i) {
      std::vector<double> mu(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a) {
        const double t = per_axis > 1 ? static_cast<double>(digits[static_cast<std::size_t>(a)]) /
                                            static_cast<double>(per_axis - 1)
                                      : 0.5;
        mu[static_cast<std::size_t>(a)] = -radius + 2.0 * radius * t;
      }
      candidates.push_back(std::move(mu));
      for (int a = d - 1; a >= 0; --a) {
        if (++digits[static_cast<std::size_t>(a)] < per_axis) break;
        digits[static_cast<std::size_t>(a)] = 0;
      }
    }

    const approx::MixtureModel init(kernel, nu, {1.0},
                                    std::vector<double>(static_cast<std::size_t>(d), 0.0));
    const int steps = greedy_steps > 0 ? static_cast<int>(greedy_steps)
                                       : static_cast<int>(m) - 1;
    const approx::MixtureModel mix =
        approx::greedy_refine(init, target_fn, p, quad, steps, candidates);
    const double err = analysis::lp_distance([&](std::span<const double> x) { return mix(x); },
                                             target_fn, p, quad);

    RateRow row;
    row.size = static_cast<double>(m);
    row.nu = nu;
    row.mean_error = err;
    row.std_error = 0.0;
    row.best_error = err;
    row.bound = report.constant_k *
                std::pow(static_cast<double>(m), report.theoretical_exponent);
    row.bound_certified = false;
    row.bound_ok = err <= row.bound * (1.0 + 1e-3) + 1e-9;
    row.trials = 1;
    report.rows.push_back(row);
  }

  std::vector<double> sizes, means;
  for (const auto& r : report.rows) {
    sizes.push_back(r.size);
    means.push_back(r.mean_error);
  }
  report.fit = fit_loglog_slope(sizes, means);
  report.verdict = decide_verdict(report);
  return report;
}

int run_approx(RunContext& ctx) {
  const Config& cfg = ctx.config;
  const std::vector<std::size_t> m_grid = cfg.get_size_list("approx", "m_grid");
  if (m_grid.empty())
    throw ConfigError("[approx] m_grid must be a nonempty, strictly increasing list");
  const double p = cfg.get_double("approx", "p", 2.0);
  const std::string method = cfg.get_string("approx", "method", "maurey");
  if (method != "maurey" && method != "greedy")
    throw ConfigError("[approx] method must be 'maurey' or 'greedy'; got '" + method + "'");
  const long trials = cfg.get_int("approx", "trials", 20);
  if (trials < 1) throw ConfigError("[approx] trials must be >= 1");

  RateReport report;
  if (method == "greedy") {
    if (p != 2.0)
      throw ConfigError("[approx] method = greedy requires p = 2");
    if (trials != 1)
      throw ConfigError("[approx] method = greedy is deterministic; set trials = 1");
    const double alpha =
        cfg.find_double("approx", "alpha").value_or(ctx.target.smoothness().alpha);
    report = run_greedy_rate(ctx, p, alpha, m_grid, cfg.get_int("approx", "greedy_steps", 0));
  } else {
    approx::ApproxRateConfig ac{ctx.kernel,
                                ctx.target,
                                p,
                                cfg.find_double("approx", "alpha"),
                                cfg.find_double("approx", "c_p"),
                                m_grid,
                                static_cast<int>(trials),
                                ctx.seed,
                                ctx.threads,
                                ctx.quad};
    report = approx::approx_rate_experiment(ac);
  }
  report.provenance = ctx.provenance;

  std::ostringstream csv;
  csv << "m,nu,mean_error,std_error,bound,provenance\n";
  for (const auto& row : report.rows)
    csv << format_number(row.size) << ',' << format_number(row.nu) << ','
        << format_number(row.mean_error) << ',' << format_number(row.std_error) << ','
        << format_number(row.bound) << ',' << ctx.provenance << '\n';
  write_text_file(ctx.out_dir + "/rate_report.csv", csv.str());

  json j = report_json(report);
  j["provenance"] = provenance_json(ctx);
  write_text_file(ctx.out_dir + "/rate_report.json", j.dump(2) + "\n");
  write_text_file(ctx.out_dir + "/summary.txt", rate_summary(report));

  switch (report.verdict) {
    case Verdict::pass: return 0;
    case Verdict::fail: return 2;
    case Verdict::not_certified: return 3;
  }
  return 1;
}

// --- estimate ---------------------------------------------------------------

int run_estimate(RunContext& ctx) {
  const Config& cfg = ctx.config;
  const std::vector<std::size_t> n_grid = cfg.get_size_list("estimate", "n_grid");
  if (n_grid.empty())
    throw ConfigError("[estimate] n_grid must be a nonempty, strictly increasing list");
  const long trials = cfg.get_int("estimate", "trials", 20);
  if (trials < 1) throw ConfigError("[estimate] trials must be >= 1");

  estimate::AdaptiveOptions opts;
  const double default_s = std::min(1.0, std::max(0.01, ctx.target.smoothness().alpha));
  opts.s = cfg.get_double("estimate", "s", default_s);
  opts.b3 = cfg.get_double("estimate", "b3", 1.0);
  opts.candidate_rule = cfg.get_string("estimate", "candidate_rule", "subsample");
  const long max_iters = cfg.get_int("estimate", "max_iters", 2000);
  if (max_iters < 1) throw ConfigError("[estimate] max_iters must be >= 1");
  opts.max_iters = static_cast<std::size_t>(max_iters);
  opts.c2 = cfg.get_double("estimate", "c2", 1.0);
  if (const auto k2 = cfg.find_double("estimate", "k2")) {
    opts.k2 = *k2;
  } else {
    const analysis::QuadratureSpec probe =
        ctx.quad ? *ctx.quad : analysis::default_quadrature(ctx.kernel, ctx.target, 1.0);
    opts.k2 = targets::resolve_k2(ctx.target, 2.0, probe).value_or(1.0);
  }

  estimate::EstimateRateConfig ec{ctx.kernel,
                                  ctx.target,
                                  opts,
                                  n_grid,
                                  static_cast<int>(trials),
                                  ctx.seed,
                                  ctx.threads,
                                  cfg.get_bool("estimate", "check_decomposition", true),
                                  ctx.quad};
  RateReport report = estimate::estimation_rate_experiment(ec);
  report.provenance = ctx.provenance;

  std::ostringstream csv;
  csv << "n,m_n,nu,epsilon_n,mean_sq_error,std,provenance\n";
  for (const auto& row : report.rows) {
    const auto m_n = static_cast<std::uint64_t>(std::ceil(std::sqrt(row.size)));
    csv << format_number(row.size) << ',' << m_n << ',' << format_number(row.nu) << ','
        << format_number(row.epsilon) << ',' << format_number(row.mean_error) << ','
        << format_number(row.std_error) << ',' << ctx.provenance << '\n';
  }
  write_text_file(ctx.out_dir + "/est_report.csv", csv.str());

  json j = report_json(report);
  j["provenance"] = provenance_json(ctx);
  write_text_file(ctx.out_dir + "/est_report.json", j.dump(2) + "\n");
  write_text_file(ctx.out_dir + "/summary.txt", rate_summary(report));

  switch (report.verdict) {
    case Verdict::pass: return 0;
    case Verdict::fail: return 2;
    case Verdict::not_certified: return 3;
  }
  return 1;
}

// --- smoothing --------------------------------------------------------------

int run_smoothing(RunContext& ctx) {
  const Config& cfg = ctx.config;
  const double p = cfg.get_double("smoothing", "p", 2.0);
  const std::vector<double> nu_grid = cfg.get_double_list("smoothing", "nu_grid");
  if (nu_grid.size() < 3)
    throw ConfigError("[smoothing] nu_grid must list at least 3 dilations");
  for (double nu : nu_grid)
    if (!(nu > 0.0)) throw ConfigError("[smoothing] nu_grid entries must be positive");

  const double min_nu = *std::min_element(nu_grid.begin(), nu_grid.end());
  const analysis::QuadratureSpec quad =
      ctx.quad ? *ctx.quad
               : analysis::default_quadrature(ctx.kernel, ctx.target, std::min(1.0, min_nu));

  std::vector<analysis::SmoothingError> rows;
  rows.reserve(nu_grid.size());
  for (double nu : nu_grid)
    rows.push_back(analysis::smoothing_error(ctx.target, ctx.kernel, nu, p, quad));

  std::vector<double> nus, measured;
  bool all_within = true;
  for (const auto& r : rows) {
    nus.push_back(r.nu);
    measured.push_back(r.measured);
    if (!r.within_bound()) all_within = false;
  }
  const LoglogFit fit = fit_loglog_slope(nus, measured);
  const double alpha = rows.front().alpha;
  const bool slope_ok = fit.slope <= -alpha + 0.1;
  const Verdict verdict = (all_within && slope_ok) ? Verdict::pass : Verdict::fail;

  std::ostringstream csv;
  csv << "nu,measured,bound,k1,k2,alpha,within_bound,provenance\n";
  for (const auto& r : rows)
    csv << format_number(r.nu) << ',' << format_number(r.measured) << ','
        << format_number(r.bound) << ',' << format_number(r.k1) << ',' << format_number(r.k2)
        << ',' << format_number(r.alpha) << ',' << (r.within_bound() ? 1 : 0) << ','
        << ctx.provenance << '\n';
  write_text_file(ctx.out_dir + "/smoothing_report.csv", csv.str());

  json jrows = json::array();
  for (const auto& r : rows)
    jrows.push_back(json{{"nu", r.nu},
                         {"measured", r.measured},
                         {"bound", r.bound},
                         {"k1", r.k1},
                         {"k2", r.k2},
                         {"alpha", r.alpha},
                         {"within_bound", r.within_bound()}});
  json j{{"experiment", "smoothing"},
         {"verdict", verdict_name(verdict)},
         {"p", p},
         {"alpha", alpha},
         {"slope", fit.slope},
         {"slope_threshold", -alpha + 0.1},
         {"all_within_bound", all_within},
         {"rows", jrows},
         {"provenance", provenance_json(ctx)}};
  write_text_file(ctx.out_dir + "/smoothing_report.json", j.dump(2) + "\n");

  std::ostringstream summary;
  summary << "experiment: smoothing\n";
  summary << "verdict: " << verdict_name(verdict) << "\n";
  summary << "fitted nu-slope: " << format_number(fit.slope) << " (threshold "
          << format_number(-alpha + 0.1) << ")\n";
  summary << "bound rows respected: " << (all_within ? "all" : "NOT all") << "\n";
  write_text_file(ctx.out_dir + "/summary.txt", summary.str());

  return verdict == Verdict::pass ? 0 : 2;
}

// --- diagnostics ------------------------------------------------------------

int run_diagnostics(RunContext& ctx) {
  const Config& cfg = ctx.config;
  const double nu = cfg.get_double("diagnostics", "nu", 2.0);

  estimate::EmpiricalProcessConfig ep;
  ep.n_grid = cfg.get_size_list("diagnostics", "n_grid");
  if (ep.n_grid.empty()) ep.n_grid = {100, 1000, 10000};
  ep.trials = static_cast<int>(cfg.get_int("diagnostics", "trials", 10));
  ep.mu_grid_count = static_cast<int>(cfg.get_int("diagnostics", "mu_grid_count", 41));
  ep.mu_grid_radius = cfg.get_double("diagnostics", "mu_grid_radius", 4.0);
  ep.seed = ctx.seed;
  ep.threads = ctx.threads;
  const estimate::EmpiricalProcessResult ep_result =
      estimate::empirical_process_sup(ctx.kernel, nu, ctx.target, ep);

  estimate::ConvexSupConfig cs;
  cs.n = static_cast<std::size_t>(cfg.get_int("diagnostics", "n", 500));
  cs.atoms = static_cast<std::size_t>(cfg.get_int("diagnostics", "atoms", 5));
  cs.combos = static_cast<std::size_t>(cfg.get_int("diagnostics", "combos", 100));
  cs.seeds = static_cast<std::size_t>(cfg.get_int("diagnostics", "seeds", 10));
  cs.atom_radius = cfg.get_double("diagnostics", "atom_radius", 3.0);
  cs.seed = derive_seed(ctx.seed, 99, 0);
  const estimate::ConvexSupResult cs_result =
      estimate::convex_sup_check(ctx.kernel, nu, ctx.target, cs);

  const double slope_tol = cfg.get_double("diagnostics", "slope_tolerance", 0.15);
  const bool slope_ok =
      ep_result.sizes.size() >= 3 && std::abs(ep_result.fit.slope - (-0.5)) <= slope_tol;
  const bool convex_ok = cs_result.cases_passed == cs_result.cases_total;
  const Verdict verdict =
      (slope_ok && ep_result.bound_ok && convex_ok) ? Verdict::pass : Verdict::fail;

  std::ostringstream ep_csv;
  ep_csv << "n,sup_mean,bound,provenance\n";
  for (std::size_t i = 0; i < ep_result.sizes.size(); ++i)
    ep_csv << format_number(ep_result.sizes[i]) << ',' << format_number(ep_result.sup_means[i])
           << ',' << format_number(ep_result.bounds[i]) << ',' << ctx.provenance << '\n';
  write_text_file(ctx.out_dir + "/empirical_process.csv", ep_csv.str());

  std::ostringstream cs_csv;
  cs_csv << "cases_total,cases_passed,max_excess,provenance\n";
  cs_csv << cs_result.cases_total << ',' << cs_result.cases_passed << ','
         << format_number(cs_result.max_excess) << ',' << ctx.provenance << '\n';
  write_text_file(ctx.out_dir + "/convex_sup.csv", cs_csv.str());

  json j{{"experiment", "diagnostics"},
         {"verdict", verdict_name(verdict)},
         {"nu", nu},
         {"empirical_process",
          json{{"sizes", ep_result.sizes},
               {"sup_means", ep_result.sup_means},
               {"bounds", ep_result.bounds},
               {"slope", ep_result.fit.slope},
               {"slope_target", -0.5},
               {"slope_tolerance", slope_tol},
               {"bound_ok", ep_result.bound_ok}}},
         {"convex_sup",
          json{{"cases_total", cs_result.cases_total},
               {"cases_passed", cs_result.cases_passed},
               {"max_excess", cs_result.max_excess}}},
         {"provenance", provenance_json(ctx)}};
  write_text_file(ctx.out_dir + "/diagnostics_report.json", j.dump(2) + "\n");

  std::ostringstream summary;
  summary << "experiment: diagnostics\n";
  summary << "verdict: " << verdict_name(verdict) << "\n";
  summary << "empirical-process slope: " << format_number(ep_result.fit.slope)
          << " (target -0.5 +/- " << format_number(slope_tol) << ")\n";
  summary << "envelope bound respected: " << (ep_result.bound_ok ? "yes" : "NO") << "\n";
  summary << "convex-hull supremum cases: " << cs_result.cases_passed << "/"
          << cs_result.cases_total << "\n";
  write_text_file(ctx.out_dir + "/summary.txt", summary.str());

  return verdict == Verdict::pass ? 0 : 2;
}

// --- invariants -------------------------------------------------------------

struct InvariantResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

InvariantResult check(const std::string& name, const std::function<std::string()>& body) {
  InvariantResult r;
  r.name = name;
  try {
    r.detail = body();  // empty string means pass
    r.passed = r.detail.empty();
    if (r.passed) r.detail = "ok";
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = e.what();
  }
  for (auto& c : r.detail)
    if (c == ',' || c == '\n') c = ';';
  return r;
}

std::vector<InvariantResult> invariant_battery() {
  std::vector<InvariantResult> out;

  out.push_back(check("kernel_normalization", [] {
    for (const char* name : {"gaussian", "uniform", "triangular", "epanechnikov"}) {
      const auto k = kernels::make_kernel(name, 1);
      // Odd node count puts midpoint kinks on-grid (triangular is then exact).
      const auto quad =
          analysis::QuadratureSpec::symmetric_box(1, k.axis_effective_radius(), 65537);
      const double mass = analysis::integrate(
          [&](std::span<const double> x) { return k(x); }, quad);
      if (std::abs(mass - 1.0) > 1e-8)
        return std::string(name) + " mass " + format_number(mass);
    }
    return std::string();
  }));

  out.push_back(check("dilation_norm_identity", [] {
    struct Case {
      const char* kernel;
      double nu, p;
    };
    for (const Case c : {Case{"gaussian", 3.7, 2.5}, Case{"epanechnikov", 0.6, 2.0}}) {
      const auto k = kernels::make_kernel(c.kernel, 1);
      const auto quad = analysis::QuadratureSpec::symmetric_box(
          1, k.axis_effective_radius() / std::min(1.0, c.nu) + 1.0, 32768);
      const double lhs = kernels::dilated_lp_norm(k, c.nu, c.p, quad);
      const double rhs =
          std::pow(c.nu, 1.0 - 1.0 / c.p) * kernels::dilated_lp_norm(k, 1.0, c.p, quad);
      if (std::abs(lhs - rhs) / rhs > 1e-6)
        return std::string(c.kernel) + " mismatch " + format_number(lhs) + " vs " +
               format_number(rhs);
    }
    return std::string();
  }));

  out.push_back(check("moment_hook_vs_quadrature", [] {
    const auto k = kernels::make_kernel("triangular", 1);
    const auto quad = analysis::QuadratureSpec::symmetric_box(1, 1.0, 8192);
    const double hook = kernels::kernel_moment(k, 0.7, quad);
    const auto plain = kernels::KernelDensity::custom(
        "triangular_noclosedform", 1,
        [k](std::span<const double> x) { return k(x); }, k.sup_norm(), 1.0, k.vc_dim(),
        true);
    const double numeric = kernels::kernel_moment(plain, 0.7, quad);
    if (std::abs(hook - numeric) > 1e-6)
      return "hook " + format_number(hook) + " vs quadrature " + format_number(numeric);
    return std::string();
  }));

  out.push_back(check("translation_modulus_monotone_and_even", [] {
    const auto f0 = targets::make_target("gaussian", 1);
    const auto quad = analysis::QuadratureSpec::symmetric_box(1, 12.0, 4096);
    double prev = 0.0;
    for (double y : {0.1, 0.4, 0.8, 1.2, 1.6}) {
      const double shift[1] = {y};
      const double neg[1] = {-y};
      const double v = targets::translation_modulus(f0, shift, 2.0, quad);
      const double vn = targets::translation_modulus(f0, neg, 2.0, quad);
      if (v + 1e-12 < prev)
        return "modulus decreased at shift " + format_number(y);
      if (std::abs(v - vn) > 1e-10) return "modulus not even at " + format_number(y);
      prev = v;
    }
    return std::string();
  }));

  out.push_back(check("gram_positive_semidefinite", [] {
    const auto k = kernels::make_kernel("gaussian", 1);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    std::vector<double> locs(6);
    for (double& v : locs) v = unif(rng);
    const Eigen::MatrixXd gram = estimate::gram_matrix(k, 2.0, locs, locs.size());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.eigenvalues().minCoeff() < -1e-10)
      return "min eigenvalue " + format_number(eig.eigenvalues().minCoeff());
    return std::string();
  }));

  out.push_back(check("frank_wolfe_descent_and_certificate", [] {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int m = 8;
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) a(i, j) = unif(rng);
    const Eigen::MatrixXd gram =
        a.transpose() * a / m + 0.1 * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) b(i) = unif(rng);
    const auto fit = estimate::fit_weights_frank_wolfe(gram, b, 1e-8, 100000);
    if (!fit.certified) return std::string("gap not certified");
    for (std::size_t i = 1; i < fit.risk_trace.size(); ++i)
      if (fit.risk_trace[i] > fit.risk_trace[i - 1] + 1e-12)
        return "risk increased at step " + std::to_string(i);
    return std::string();
  }));

  out.push_back(check("rate_exponent_branch_continuity", [] {
    const double lo = approx::rate_exponent(2.0 - 1e-9, 0.7, 2);
    const double hi = approx::rate_exponent(2.0, 0.7, 2);
    if (std::abs(lo - hi) > 1e-6)
      return "exponent jump " + format_number(lo) + " vs " + format_number(hi);
    const double nlo = approx::optimal_nu(32, 2.0 - 1e-9, 0.7, 2, 1, 1, 1, 1);
    const double nhi = approx::optimal_nu(32, 2.0, 0.7, 2, 1, 1, 1, 1);
    if (std::abs(nlo - nhi) / nhi > 1e-6)
      return "nu schedule jump " + format_number(nlo) + " vs " + format_number(nhi);
    return std::string();
  }));

  out.push_back(check("maurey_sampling_deterministic", [] {
    const auto k = kernels::make_kernel("gaussian", 1);
    const auto f0 = targets::make_target("gaussian", 1);
    const auto m1 = approx::maurey_sample(f0, k, 2.0, 16, 42);
    const auto m2 = approx::maurey_sample(f0, k, 2.0, 16, 42);
    const auto m3 = approx::maurey_sample(f0, k, 2.0, 16, 43);
    if (m1.locations_flat() != m2.locations_flat())
      return std::string("same seed produced different locations");
    if (m1.locations_flat() == m3.locations_flat())
      return std::string("different seeds produced identical locations");
    return std::string();
  }));

  out.push_back(check("empirical_risk_gram_identity", [] {
    const auto k = kernels::make_kernel("gaussian", 1);
    const auto f0 = targets::make_target("gaussian", 1);
    const approx::MixtureModel mix(k, 2.0, {0.5, 0.3, 0.2}, {-1.0, 0.0, 1.5});
    const auto sample = analysis::EmpiricalMeasure::draw(f0, 64, 5);
    const double via_gram = estimate::empirical_risk(mix, sample);
    const auto quad = analysis::QuadratureSpec::symmetric_box(1, 12.0, 8192);
    const double l2 = analysis::lp_norm(
        [&](std::span<const double> x) { return mix(x); }, 2.0, quad);
    const double direct =
        l2 * l2 -
        2.0 * analysis::empirical_mean(sample,
                                       [&](std::span<const double> x) { return mix(x); });
    if (std::abs(via_gram - direct) > 1e-6)
      return "gram " + format_number(via_gram) + " vs direct " + format_number(direct);
    return std::string();
  }));

  out.push_back(check("smoothing_error_within_bound", [] {
    const auto k = kernels::make_kernel("gaussian", 1);
    const auto f0 = targets::make_target("gaussian", 1);
    const auto quad = analysis::default_quadrature(k, f0, 1.0);
    for (double nu : {1.0, 4.0, 16.0}) {
      const auto err = analysis::smoothing_error(f0, k, nu, 2.0, quad);
      if (!err.within_bound())
        return "violated at nu " + format_number(nu) + ": " + format_number(err.measured) +
               " > " + format_number(err.bound);
    }
    return std::string();
  }));

  return out;
}

int run_invariants(RunContext& ctx) {
  const std::vector<InvariantResult> results = invariant_battery();
  bool all = true;
  for (const auto& r : results)
    if (!r.passed) all = false;

  std::ostringstream csv;
  csv << "name,passed,detail,provenance\n";
  for (const auto& r : results)
    csv << r.name << ',' << (r.passed ? 1 : 0) << ',' << r.detail << ',' << ctx.provenance
        << '\n';
  write_text_file(ctx.out_dir + "/invariants_report.csv", csv.str());

  json checks = json::array();
  for (const auto& r : results)
    checks.push_back(json{{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  json j{{"experiment", "invariants"},
         {"verdict", all ? "pass" : "fail"},
         {"checks", checks},
         {"provenance", provenance_json(ctx)}};
  write_text_file(ctx.out_dir + "/invariants_report.json", j.dump(2) + "\n");

  std::ostringstream summary;
  summary << "experiment: invariants\n";
  summary << "verdict: " << (all ? "pass" : "fail") << "\n";
  for (const auto& r : results)
    summary << (r.passed ? "  ok   " : "  FAIL ") << r.name
            << (r.passed ? "" : ": " + r.detail) << "\n";
  write_text_file(ctx.out_dir + "/summary.txt", summary.str());

  return all ? 0 : 2;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

int run(const std::string& config_path, const RunOptions& options) {
  Config cfg = Config::parse_file(config_path);

  const std::string kind = cfg.require_string("experiment", "kind");
  static const std::set<std::string> kinds = {"approx_rate", "estimate_rate", "smoothing",
                                              "diagnostics", "invariants"};
  if (kinds.find(kind) == kinds.end())
    throw ConfigError("[experiment] kind must be one of approx_rate, estimate_rate, "
                      "smoothing, diagnostics, invariants; got '" +
                      kind + "'");
  if (options.expected_kind && *options.expected_kind != kind)
    throw ConfigError("config kind '" + kind + "' does not match subcommand '" +
                      *options.expected_kind + "'");

  long threads = cfg.get_int("experiment", "threads", 1);
  if (options.threads) threads = *options.threads;
  if (threads < 1) throw ConfigError("[experiment] threads must be >= 1");

  std::uint64_t seed = cfg.get_u64("experiment", "seed", 1);
  if (options.seed) seed = *options.seed;

  std::string out_dir = cfg.get_string("experiment", "output_dir", "out");
  if (const char* env = std::getenv("MIXRATE_OUT_DIR"); env && *env) out_dir = env;
  if (options.out_dir) out_dir = *options.out_dir;
  std::filesystem::create_directories(out_dir);

  kernels::KernelDensity kernel = build_kernel(cfg);
  targets::TargetDensity target = build_target(cfg, kernel.dim());
  std::optional<analysis::QuadratureSpec> quad = build_quad(cfg, kernel.dim());
  const std::uint64_t h1 = fnv1a64(cfg.text());
  RunContext ctx{std::move(cfg),
                 kind,
                 out_dir,
                 seed,
                 static_cast<int>(threads),
                 hex64(fnv1a64(std::to_string(seed), h1)),
                 hex64(h1),
                 std::move(kernel),
                 std::move(target),
                 std::move(quad)};

  if (kind == "approx_rate") return run_approx(ctx);
  if (kind == "estimate_rate") return run_estimate(ctx);
  if (kind == "smoothing") return run_smoothing(ctx);
  if (kind == "diagnostics") return run_diagnostics(ctx);
  return run_invariants(ctx);
}

}  // namespace mixrate::harness
