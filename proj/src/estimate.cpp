#include "mixrate/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mixrate/quadrature.hpp"

namespace mixrate::estimate {

namespace {

// Box large enough for any kernel-only integral (moments, norms, fallbacks).
analysis::QuadratureSpec kernel_box(const kernels::KernelDensity& kernel) {
  const double r = kernel.axis_effective_radius() + 1.0;
  const int pts = kernel.dim() == 1 ? 2048 : 128;
  return analysis::QuadratureSpec::symmetric_box(kernel.dim(), r, pts);
}

void check_locations(std::span<const double> locations_flat, std::size_t m, int d,
                     const char* who) {
  if (m == 0) throw InvalidParameter(std::string(who) + " needs at least one location");
  if (locations_flat.size() != m * static_cast<std::size_t>(d))
    throw InvalidParameter(std::string(who) + " location buffer has " +
                           std::to_string(locations_flat.size()) + " entries, expected " +
                           std::to_string(m * static_cast<std::size_t>(d)));
  for (double v : locations_flat)
    if (!std::isfinite(v)) throw InvalidParameter(std::string(who) + " locations must be finite");
}

}  // namespace

Eigen::MatrixXd gram_matrix(const kernels::KernelDensity& kernel, double nu,
                            std::span<const double> locations_flat, std::size_t m) {
  const int d = kernel.dim();
  check_locations(locations_flat, m, d, "gram_matrix");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidParameter("gram_matrix needs nu > 0");

  const analysis::QuadratureSpec fallback = kernel_box(kernel);
  Eigen::MatrixXd gram(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  std::vector<double> delta(static_cast<std::size_t>(d));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j; k < m; ++k) {
      for (int a = 0; a < d; ++a)
        delta[static_cast<std::size_t>(a)] =
            locations_flat[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] -
            locations_flat[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)];
      const double v = kernels::self_convolution(kernel, nu, delta, fallback);
      gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = v;
      gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return gram;
}

Eigen::VectorXd moment_vector(const kernels::KernelDensity& kernel, double nu,
                              std::span<const double> locations_flat, std::size_t m,
                              const analysis::EmpiricalMeasure& sample) {
  const int d = kernel.dim();
  check_locations(locations_flat, m, d, "moment_vector");
  if (sample.dim() != d)
    throw InvalidParameter("moment_vector sample dimension " + std::to_string(sample.dim()) +
                           " does not match kernel dimension " + std::to_string(d));

  const kernels::DilatedKernel dilated = kernels::dilate(kernel, nu);
  const std::size_t n = sample.size();
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  std::vector<double> diff(static_cast<std::size_t>(d));
  for (std::size_t j = 0; j < m; ++j) {
    const double* mu = locations_flat.data() + j * static_cast<std::size_t>(d);
    const double total = pairwise_sum_fn(n, [&](std::size_t i) {
      const std::span<const double> x = sample.point(i);
      for (int a = 0; a < d; ++a)
        diff[static_cast<std::size_t>(a)] = x[static_cast<std::size_t>(a)] - mu[a];
      return dilated(diff);
    });
    b(static_cast<Eigen::Index>(j)) = total / static_cast<double>(n);
  }
  return b;
}

Eigen::VectorXd population_moment_vector(const kernels::KernelDensity& kernel, double nu,
                                         std::span<const double> locations_flat, std::size_t m,
                                         const targets::TargetDensity& f0) {
  const int d = kernel.dim();
  check_locations(locations_flat, m, d, "population_moment_vector");
  if (f0.dim() != d)
    throw InvalidParameter("population_moment_vector target dimension does not match kernel");

  const kernels::DilatedKernel dilated = kernels::dilate(kernel, nu);
  const analysis::PointFn smoothed = analysis::convolution(dilated, f0);
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const std::span<const double> mu(locations_flat.data() + j * static_cast<std::size_t>(d),
                                     static_cast<std::size_t>(d));
    b(static_cast<Eigen::Index>(j)) = smoothed(mu);
  }
  return b;
}

double empirical_risk(const approx::MixtureModel& mixture,
                      const analysis::EmpiricalMeasure& sample) {
  const std::size_t m = mixture.size();
  const Eigen::MatrixXd gram =
      gram_matrix(mixture.kernel(), mixture.nu(), mixture.locations_flat(), m);
  const Eigen::VectorXd b =
      moment_vector(mixture.kernel(), mixture.nu(), mixture.locations_flat(), m, sample);
  Eigen::VectorXd w(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j)
    w(static_cast<Eigen::Index>(j)) = mixture.weights()[j];
  return w.dot(gram * w) - 2.0 * w.dot(b);
}

WeightFit fit_weights_frank_wolfe(const Eigen::MatrixXd& gram, const Eigen::VectorXd& moments,
                                  double epsilon, std::size_t max_iters) {
  const Eigen::Index m = gram.rows();
  if (m < 1) throw InvalidParameter("fit_weights_frank_wolfe needs a nonempty Gram matrix");
  if (gram.cols() != m)
    throw InvalidParameter("fit_weights_frank_wolfe needs a square Gram matrix");
  if (moments.size() != m)
    throw InvalidParameter("fit_weights_frank_wolfe moment vector length " +
                           std::to_string(moments.size()) + " does not match Gram size " +
                           std::to_string(m));
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw InvalidParameter("fit_weights_frank_wolfe needs epsilon > 0");
  if (max_iters < 1) throw InvalidParameter("fit_weights_frank_wolfe needs max_iters >= 1");

  WeightFit fit;
  fit.epsilon = epsilon;

  Eigen::VectorXd pi = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  Eigen::VectorXd gpi = gram * pi;

  for (std::size_t it = 0;; ++it) {
    // grad = 2 (G pi - b); the linear minimizer over the simplex is a vertex.
    Eigen::Index best = 0;
    double best_val = gpi(0) - moments(0);
    for (Eigen::Index j = 1; j < m; ++j) {
      const double v = gpi(j) - moments(j);
      if (v < best_val) {
        best_val = v;
        best = j;
      }
    }
    const double risk = pi.dot(gpi) - 2.0 * pi.dot(moments);
    const double gap = 2.0 * ((pi.dot(gpi) - pi.dot(moments)) - best_val);
    fit.risk_trace.push_back(risk);
    fit.risk = risk;
    fit.duality_gap = gap;
    fit.iterations = it;
    if (gap <= epsilon) {
      fit.certified = true;
      break;
    }
    if (it == max_iters) break;

    // Exact line search along d = e_best - pi for the quadratic risk.
    const double dgd = gram(best, best) - 2.0 * gpi(best) + pi.dot(gpi);
    double gamma = dgd > 0.0 ? gap / (2.0 * dgd) : 1.0;
    gamma = std::clamp(gamma, 0.0, 1.0);
    pi *= 1.0 - gamma;
    pi(best) += gamma;
    gpi = (1.0 - gamma) * gpi + gamma * gram.col(best);
  }

  fit.weights.assign(pi.data(), pi.data() + m);
  return fit;
}

LeastSquaresFit adaptive_estimate(const analysis::EmpiricalMeasure& sample,
                                  const kernels::KernelDensity& kernel,
                                  const AdaptiveOptions& options) {
  const int d = kernel.dim();
  if (sample.dim() != d)
    throw InvalidParameter("adaptive_estimate sample dimension does not match kernel");
  const std::size_t n = sample.size();
  if (n < 4)
    throw InsufficientData("adaptive_estimate needs at least 4 observations; got " +
                           std::to_string(n));
  if (!(options.s > 0.0) || options.s > 1.0)
    throw InvalidParameter("adaptive_estimate needs smoothness order s in (0, 1]");
  if (!(options.b3 > 0.0)) throw InvalidParameter("adaptive_estimate needs b3 > 0");
  if (!(options.c2 > 0.0)) throw InvalidParameter("adaptive_estimate needs c2 > 0");
  if (options.max_iters < 1) throw InvalidParameter("adaptive_estimate needs max_iters >= 1");
  if (options.candidate_rule != "subsample" && options.candidate_rule != "grid")
    throw InvalidParameter("adaptive_estimate candidate_rule must be 'subsample' or 'grid'; got '" +
                           options.candidate_rule + "'");

  const std::size_t m =
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const analysis::QuadratureSpec box = kernel_box(kernel);
  const double k1 = options.k1 ? *options.k1 : kernels::kernel_moment(kernel, options.s, box);
  const double k2 = options.k2.value_or(1.0);
  const double phi2 =
      kernel.lp_norm_hook(2.0).value_or(kernels::dilated_lp_norm(kernel, 1.0, 2.0, box));
  const double nu = approx::optimal_nu(m, 2.0, options.s, d, k1, k2, phi2, options.c2);
  const double epsilon =
      options.b3 * std::pow(static_cast<double>(n),
                            -options.s / (2.0 * options.s + static_cast<double>(d)));

  std::vector<double> locations;
  locations.reserve(m * static_cast<std::size_t>(d));
  if (options.candidate_rule == "subsample") {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(options.seed, 0xC0FFEEULL, 0));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < m; ++j) {
      const auto x = sample.point(idx[j]);
      locations.insert(locations.end(), x.begin(), x.end());
    }
  } else {
    std::vector<double> lo(static_cast<std::size_t>(d), kInf);
    std::vector<double> hi(static_cast<std::size_t>(d), -kInf);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = sample.point(i);
      for (int a = 0; a < d; ++a) {
        lo[static_cast<std::size_t>(a)] = std::min(lo[static_cast<std::size_t>(a)], x[a]);
        hi[static_cast<std::size_t>(a)] = std::max(hi[static_cast<std::size_t>(a)], x[a]);
      }
    }
    const std::size_t per_axis = static_cast<std::size_t>(
        std::ceil(std::pow(static_cast<double>(m), 1.0 / static_cast<double>(d))));
    std::vector<std::size_t> digits(static_cast<std::size_t>(d), 0);
    for (std::size_t j = 0; j < m; ++j) {
      for (int a = 0; a < d; ++a) {
        const std::size_t k = digits[static_cast<std::size_t>(a)];
        const double t = per_axis > 1
                             ? static_cast<double>(k) / static_cast<double>(per_axis - 1)
                             : 0.5;
        locations.push_back(lo[static_cast<std::size_t>(a)] +
                            t * (hi[static_cast<std::size_t>(a)] -
                                 lo[static_cast<std::size_t>(a)]));
      }
      for (int a = d - 1; a >= 0; --a) {
        if (++digits[static_cast<std::size_t>(a)] < per_axis) break;
        digits[static_cast<std::size_t>(a)] = 0;
      }
    }
  }

  const Eigen::MatrixXd gram = gram_matrix(kernel, nu, locations, m);
  const Eigen::VectorXd b = moment_vector(kernel, nu, locations, m, sample);
  WeightFit wf = fit_weights_frank_wolfe(gram, b, epsilon, options.max_iters);

  double sum = 0.0;
  for (double w : wf.weights) sum += w;
  for (double& w : wf.weights) w /= sum;

  return LeastSquaresFit{
      approx::MixtureModel(kernel, nu, std::move(wf.weights), std::move(locations)),
      wf.risk,
      wf.duality_gap,
      epsilon,
      wf.iterations,
      wf.certified,
      nu,
      m};
}

KlemelaTerms klemela_decomposition_check(const LeastSquaresFit& fit,
                                         const approx::MixtureModel& f_star,
                                         const targets::TargetDensity& f0,
                                         const analysis::EmpiricalMeasure& sample,
                                         const analysis::QuadratureSpec& quad) {
  if (f_star.dim() != fit.mixture.dim() || f0.dim() != fit.mixture.dim())
    throw InvalidParameter("klemela_decomposition_check needs matching dimensions");

  const approx::MixtureModel& fhat = fit.mixture;
  const analysis::PointFn fhat_fn = [&](std::span<const double> x) { return fhat(x); };
  const analysis::PointFn fstar_fn = [&](std::span<const double> x) { return f_star(x); };
  const analysis::PointFn f0_fn = [&](std::span<const double> x) { return f0(x); };

  KlemelaTerms terms;
  const double lhs_norm = analysis::lp_distance(fhat_fn, f0_fn, 2.0, quad);
  const double star_norm = analysis::lp_distance(fstar_fn, f0_fn, 2.0, quad);
  terms.lhs = lhs_norm * lhs_norm;
  terms.f_star_error = star_norm * star_norm;

  const analysis::PointFn diff = [&](std::span<const double> x) {
    return fhat(x) - f_star(x);
  };
  const double pn_diff = analysis::empirical_mean(sample, diff);
  const double p_diff = analysis::integrate(
      [&](std::span<const double> x) { return (fhat(x) - f_star(x)) * f0(x); }, quad);
  terms.fluctuation = 2.0 * (pn_diff - p_diff);
  terms.epsilon_used = fit.certified ? fit.epsilon : std::max(fit.duality_gap, 0.0);
  terms.holds =
      terms.lhs <= terms.f_star_error + terms.fluctuation + terms.epsilon_used + 1e-5;
  return terms;
}

EmpiricalProcessResult empirical_process_sup(const kernels::KernelDensity& kernel, double nu,
                                             const targets::TargetDensity& f0,
                                             const EmpiricalProcessConfig& config) {
  const int d = kernel.dim();
  if (f0.dim() != d)
    throw InvalidParameter("empirical_process_sup target dimension does not match kernel");
  if (config.n_grid.empty()) throw InvalidParameter("empirical_process_sup needs an n grid");
  for (std::size_t n : config.n_grid)
    if (n < 2) throw InvalidParameter("empirical_process_sup needs sample sizes >= 2");
  if (config.trials < 1) throw InvalidParameter("empirical_process_sup needs trials >= 1");
  if (config.mu_grid_count < 2 || !(config.mu_grid_radius > 0.0))
    throw InvalidParameter("empirical_process_sup needs mu_grid_count >= 2 and a positive radius");
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw InvalidParameter("empirical_process_sup needs nu > 0");

  const kernels::DilatedKernel dilated = kernels::dilate(kernel, nu);
  const analysis::PointFn smoothed = analysis::convolution(dilated, f0);

  // Evaluation lattice of location parameters mu.
  std::vector<std::vector<double>> mu_grid;
  {
    const std::size_t per_axis = static_cast<std::size_t>(config.mu_grid_count);
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= per_axis;
    std::vector<std::size_t> digits(static_cast<std::size_t>(d), 0);
    mu_grid.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
      std::vector<double> mu(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a) {
        const double t = static_cast<double>(digits[static_cast<std::size_t>(a)]) /
                         static_cast<double>(per_axis - 1);
        mu[static_cast<std::size_t>(a)] = -config.mu_grid_radius +
                                          2.0 * config.mu_grid_radius * t;
      }
      mu_grid.push_back(std::move(mu));
      for (int a = d - 1; a >= 0; --a) {
        if (++digits[static_cast<std::size_t>(a)] < per_axis) break;
        digits[static_cast<std::size_t>(a)] = 0;
      }
    }
  }
  std::vector<double> population(mu_grid.size());
  for (std::size_t k = 0; k < mu_grid.size(); ++k) population[k] = smoothed(mu_grid[k]);

  EmpiricalProcessResult result;
  const double vc = kernel.vc_dim();
  for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni) {
    const std::size_t n = config.n_grid[ni];
    std::vector<double> sups(static_cast<std::size_t>(config.trials));
    parallel_for(sups.size(), config.threads, [&](std::size_t t) {
      const analysis::EmpiricalMeasure sample =
          analysis::EmpiricalMeasure::draw(f0, n, derive_seed(config.seed, ni + 1, t));
      std::vector<double> diff(static_cast<std::size_t>(d));
      double sup = 0.0;
      for (std::size_t k = 0; k < mu_grid.size(); ++k) {
        const double total = pairwise_sum_fn(n, [&](std::size_t i) {
          const auto x = sample.point(i);
          for (int a = 0; a < d; ++a)
            diff[static_cast<std::size_t>(a)] =
                x[static_cast<std::size_t>(a)] - mu_grid[k][static_cast<std::size_t>(a)];
          return dilated(diff);
        });
        sup = std::max(sup, std::abs(total / static_cast<double>(n) - population[k]));
      }
      sups[t] = sup;
    });
    result.sizes.push_back(static_cast<double>(n));
    result.sup_means.push_back(pairwise_sum(sups) / static_cast<double>(config.trials));
    result.bounds.push_back(dilated.sup_norm() *
                            std::sqrt(vc / static_cast<double>(n)));
    if (result.sup_means.back() > result.bounds.back()) result.bound_ok = false;
  }

  if (result.sizes.size() >= 3) {
    result.fit = harness::fit_loglog_slope(result.sizes, result.sup_means);
  } else {
    result.fit.warnings.push_back("too few sample sizes for a slope fit");
  }
  return result;
}

ConvexSupResult convex_sup_check(const kernels::KernelDensity& kernel, double nu,
                                 const targets::TargetDensity& f0,
                                 const ConvexSupConfig& config) {
  const int d = kernel.dim();
  if (f0.dim() != d)
    throw InvalidParameter("convex_sup_check target dimension does not match kernel");
  if (config.n < 1 || config.atoms < 1 || config.combos < 1 || config.seeds < 1)
    throw InvalidParameter("convex_sup_check needs n, atoms, combos, seeds all >= 1");
  if (!(config.atom_radius > 0.0))
    throw InvalidParameter("convex_sup_check needs a positive atom radius");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidParameter("convex_sup_check needs nu > 0");

  const kernels::DilatedKernel dilated = kernels::dilate(kernel, nu);
  const analysis::PointFn smoothed = analysis::convolution(dilated, f0);

  ConvexSupResult result;
  std::vector<double> diff(static_cast<std::size_t>(d));
  for (std::size_t si = 0; si < config.seeds; ++si) {
    std::mt19937_64 atom_rng(derive_seed(config.seed, 1, si));
    std::uniform_real_distribution<double> unif(-config.atom_radius, config.atom_radius);
    std::vector<std::vector<double>> atoms(config.atoms,
                                           std::vector<double>(static_cast<std::size_t>(d)));
    for (auto& mu : atoms)
      for (double& v : mu) v = unif(atom_rng);

    const analysis::EmpiricalMeasure sample =
        analysis::EmpiricalMeasure::draw(f0, config.n, derive_seed(config.seed, 2, si));

    // Signed deviation of each atom evaluator.
    std::vector<double> dev(config.atoms);
    double max_abs_dev = 0.0;
    for (std::size_t j = 0; j < config.atoms; ++j) {
      const double total = pairwise_sum_fn(config.n, [&](std::size_t i) {
        const auto x = sample.point(i);
        for (int a = 0; a < d; ++a)
          diff[static_cast<std::size_t>(a)] =
              x[static_cast<std::size_t>(a)] - atoms[j][static_cast<std::size_t>(a)];
        return dilated(diff);
      });
      dev[j] = total / static_cast<double>(config.n) - smoothed(atoms[j]);
      max_abs_dev = std::max(max_abs_dev, std::abs(dev[j]));
    }

    std::mt19937_64 combo_rng(derive_seed(config.seed, 3, si));
    std::exponential_distribution<double> expo(1.0);
    for (std::size_t c = 0; c < config.combos; ++c) {
      std::vector<double> lambda(config.atoms);
      double sum = 0.0;
      for (double& l : lambda) {
        l = expo(combo_rng);
        sum += l;
      }
      double combo_dev = 0.0;
      for (std::size_t j = 0; j < config.atoms; ++j) combo_dev += (lambda[j] / sum) * dev[j];
      combo_dev = std::abs(combo_dev);
      ++result.cases_total;
      if (combo_dev <= max_abs_dev + 1e-12) {
        ++result.cases_passed;
      } else {
        result.max_excess = std::max(result.max_excess, combo_dev - max_abs_dev);
      }
    }
  }
  return result;
}

harness::RateReport estimation_rate_experiment(const EstimateRateConfig& config) {
  if (config.n_grid.size() < 3)
    throw InsufficientData("estimation_rate_experiment needs at least 3 sample sizes; got " +
                           std::to_string(config.n_grid.size()));
  for (std::size_t i = 1; i < config.n_grid.size(); ++i)
    if (config.n_grid[i] <= config.n_grid[i - 1])
      throw InvalidParameter("n grid must be strictly increasing");
  if (config.trials < 1) throw InvalidParameter("trials must be at least 1");
  const auto& kernel = config.kernel;
  const auto& target = config.target;
  if (target.dim() != kernel.dim())
    throw InvalidParameter("estimation_rate_experiment target dimension does not match kernel");
  const int d = kernel.dim();

  // Resolve schedule constants once so every fit shares them.
  AdaptiveOptions base = config.options;
  const analysis::QuadratureSpec box = kernel_box(kernel);
  if (!base.k1) base.k1 = kernels::kernel_moment(kernel, base.s, box);
  if (!base.k2) base.k2 = 1.0;
  const double phi2 =
      kernel.lp_norm_hook(2.0).value_or(kernels::dilated_lp_norm(kernel, 1.0, 2.0, box));
  const double s = base.s;
  const double exponent = -s / (2.0 * s + static_cast<double>(d));

  const std::size_t m_front = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(config.n_grid.front()))));
  const double nu_front = approx::optimal_nu(m_front, 2.0, s, d, *base.k1, *base.k2, phi2,
                                             base.c2);
  const analysis::QuadratureSpec quad =
      config.quad ? *config.quad
                  : analysis::default_quadrature(kernel, target, std::min(1.0, nu_front));

  harness::RateReport report;
  report.experiment = "estimate_rate";
  report.theoretical_exponent = exponent;
  report.constants_certified = true;  // no constant-factor bound is claimed here
  report.notes.push_back("s=" + std::to_string(s) + " K1=" + std::to_string(*base.k1) +
                         " K2=" + std::to_string(*base.k2) + " |phi|_2=" + std::to_string(phi2) +
                         " C2=" + std::to_string(base.c2) + " B3=" + std::to_string(base.b3) +
                         " candidates=" + base.candidate_rule);
  report.notes.push_back("rows report mean squared L2 error");

  for (std::size_t ni = 0; ni < config.n_grid.size(); ++ni) {
    const std::size_t n = config.n_grid[ni];
    const std::size_t trials = static_cast<std::size_t>(config.trials);
    std::vector<double> sq_errors(trials);
    std::vector<std::uint8_t> certified(trials, 0);
    std::vector<std::uint8_t> decomposition(trials, 0);
    double nu_row = 0.0;
    double eps_row = 0.0;

    parallel_for(trials, config.threads, [&](std::size_t t) {
      const analysis::EmpiricalMeasure sample =
          analysis::EmpiricalMeasure::draw(target, n, derive_seed(config.seed, ni + 1, t));
      AdaptiveOptions opts = base;
      opts.seed = derive_seed(config.seed, 0xC0FFEEULL + ni, t);
      const LeastSquaresFit fit = adaptive_estimate(sample, kernel, opts);
      const double err = analysis::lp_distance(
          [&](std::span<const double> x) { return fit.mixture(x); },
          [&](std::span<const double> x) { return target(x); }, 2.0, quad);
      sq_errors[t] = err * err;
      certified[t] = fit.certified ? 1 : 0;
      if (t == 0) {
        nu_row = fit.nu;
        eps_row = fit.epsilon;
      }
      if (config.check_decomposition) {
        // Reference fit on the same candidates at a far tighter tolerance.
        AdaptiveOptions tight = opts;
        tight.b3 = opts.b3 / 100.0;
        tight.max_iters = opts.max_iters * 50;
        const LeastSquaresFit ref = adaptive_estimate(sample, kernel, tight);
        const KlemelaTerms terms =
            klemela_decomposition_check(fit, ref.mixture, target, sample, quad);
        decomposition[t] = terms.holds ? 1 : 0;
      }
    });

    harness::RateRow row;
    row.size = static_cast<double>(n);
    row.nu = nu_row;
    row.epsilon = eps_row;
    row.trials = static_cast<std::uint64_t>(trials);
    const double n_tr = static_cast<double>(trials);
    const double mean = pairwise_sum(sq_errors) / n_tr;
    double var = 0.0;
    for (double e : sq_errors) var += (e - mean) * (e - mean);
    var = trials > 1 ? var / (n_tr - 1.0) : 0.0;
    row.mean_error = mean;
    row.std_error = std::sqrt(var / n_tr);
    row.best_error = *std::min_element(sq_errors.begin(), sq_errors.end());
    report.rows.push_back(row);

    report.fits_total += trials;
    for (auto c : certified) report.fits_certified += c;
    if (config.check_decomposition) {
      report.decomposition_checked += trials;
      for (auto h : decomposition) report.decomposition_passed += h;
    }
  }

  std::vector<double> sizes, means;
  for (const auto& r : report.rows) {
    sizes.push_back(r.size);
    means.push_back(r.mean_error);
  }
  report.fit = harness::fit_loglog_slope(sizes, means);
  report.verdict = harness::decide_verdict(report);
  return report;
}

}  // namespace mixrate::estimate
