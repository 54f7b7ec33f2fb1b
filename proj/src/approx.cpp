#include "mixrate/approx.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mixrate::approx {

namespace {

double conjugate(double p) { return p / (p - 1.0); }

void check_rate_args(double p, double alpha, int d) {
  if (!(p > 1.0))
    throw InvalidParameter("rate formulas require p > 1 (p = " + std::to_string(p) + ")");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw InvalidParameter("smoothness alpha must lie in (0, 1]");
  if (d < 1) throw InvalidParameter("dimension must be positive");
}

void check_constants(double k1, double k2, double phi_norm_p, double c_p) {
  if (!(k1 > 0.0) || !(k2 > 0.0) || !(phi_norm_p > 0.0) || !(c_p > 0.0))
    throw InvalidParameter("rate constants K1, K2, |phi|_p, C_p must all be positive");
}

// Flattened tensor grid with combined trapezoid weights; used to evaluate
// many mixtures against a fixed target on the same nodes.
struct TensorGrid {
  int dim = 1;
  std::size_t size = 0;
  std::vector<double> points;   // row-major, size * dim
  std::vector<double> weights;  // size

  static TensorGrid from(const analysis::QuadratureSpec& quad) {
    quad.validate();
    if (quad.mode != analysis::QuadratureMode::tensor_grid)
      throw InvalidParameter("tensor grid cache requires tensor_grid quadrature");
    TensorGrid g;
    g.dim = quad.dim();
    std::vector<analysis::AxisRule> axes;
    for (int i = 0; i < g.dim; ++i)
      axes.push_back(analysis::axis_rule(quad.lo[i], quad.hi[i], quad.points_per_axis));
    g.size = 1;
    for (const auto& a : axes) g.size *= a.nodes.size();
    g.points.resize(g.size * static_cast<std::size_t>(g.dim));
    g.weights.resize(g.size);
    for (std::size_t idx = 0; idx < g.size; ++idx) {
      std::size_t rem = idx;
      double w = 1.0;
      for (int i = 0; i < g.dim; ++i) {
        const std::size_t k = rem % axes[i].nodes.size();
        rem /= axes[i].nodes.size();
        g.points[idx * g.dim + i] = axes[i].nodes[k];
        w *= axes[i].weights[k];
      }
      g.weights[idx] = w;
    }
    return g;
  }

  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points.data() + i * static_cast<std::size_t>(dim),
                                   static_cast<std::size_t>(dim));
  }

  std::vector<double> evaluate(const analysis::PointFn& f) const {
    std::vector<double> v(size);
    for (std::size_t i = 0; i < size; ++i) v[i] = f(point(i));
    return v;
  }

  double lp_distance(std::span<const double> fv, std::span<const double> gv, double p) const {
    const double integral = pairwise_sum_fn(size, [&](std::size_t i) {
      return weights[i] * std::pow(std::abs(fv[i] - gv[i]), p);
    });
    return std::pow(integral, 1.0 / p);
  }

  double inner(std::span<const double> fv, std::span<const double> gv) const {
    return pairwise_sum_fn(size,
                           [&](std::size_t i) { return weights[i] * fv[i] * gv[i]; });
  }
};

}  // namespace

MixtureModel::MixtureModel(kernels::KernelDensity kernel, double nu,
                           std::vector<double> weights, std::vector<double> locations_flat)
    : kernel_(std::move(kernel)), nu_(nu), weights_(std::move(weights)),
      locations_(std::move(locations_flat)) {
  if (!(nu_ > 0.0) || !std::isfinite(nu_))
    throw InvalidParameter("mixture dilation nu must be positive and finite");
  if (weights_.empty()) throw InvalidParameter("mixture needs at least one component");
  if (locations_.size() != weights_.size() * static_cast<std::size_t>(kernel_.dim()))
    throw InvalidParameter("mixture locations do not match weights times dimension");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw InvalidParameter("mixture weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw InvalidParameter("mixture weights must sum to 1 within 1e-12 (sum = " +
                           std::to_string(sum) + ")");
  for (double x : locations_)
    if (!std::isfinite(x)) throw InvalidParameter("mixture locations must be finite");
  scale_ = std::pow(nu_, kernel_.dim());
}

std::span<const double> MixtureModel::location(std::size_t j) const {
  if (j >= size()) throw InvalidParameter("mixture component index out of range");
  return std::span<const double>(locations_.data() + j * static_cast<std::size_t>(dim()),
                                 static_cast<std::size_t>(dim()));
}

double MixtureModel::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim())
    throw InvalidParameter("mixture evaluated at a point of wrong dimension");
  const int d = dim();
  double v = 0.0;
  if (kernel_.is_product()) {
    const auto& prof = kernel_.profile();
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      double g = weights_[j] * scale_;
      const double* mu = locations_.data() + j * static_cast<std::size_t>(d);
      for (int i = 0; i < d && g != 0.0; ++i) g *= prof.eval(nu_ * (x[i] - mu[i]));
      v += g;
    }
    return v;
  }
  std::vector<double> y(d);
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    const double* mu = locations_.data() + j * static_cast<std::size_t>(d);
    for (int i = 0; i < d; ++i) y[i] = nu_ * (x[i] - mu[i]);
    v += weights_[j] * scale_ * kernel_(y);
  }
  return v;
}

double rate_exponent(double p, double alpha, int d) {
  check_rate_args(p, alpha, d);
  const double q = conjugate(p);
  const double denom = alpha * q + static_cast<double>(d);
  if (p < 2.0) return -alpha / denom;
  return -alpha * q / (2.0 * denom);
}

double optimal_nu(std::size_t m, double p, double alpha, int d, double k1, double k2,
                  double phi_norm_p, double c_p) {
  check_rate_args(p, alpha, d);
  check_constants(k1, k2, phi_norm_p, c_p);
  if (m == 0) throw InvalidParameter("component count m must be positive");
  const double q = conjugate(p);
  const double denom = alpha * q + static_cast<double>(d);
  const double bracket = 3.0 * d * phi_norm_p * c_p / (alpha * q * k1 * k2);
  const double m_expo = p < 2.0 ? 1.0 / denom : q / (2.0 * denom);
  return std::pow(bracket, -q / denom) * std::pow(static_cast<double>(m), m_expo);
}

double theorem_constant_k(double p, double alpha, int d, double k1, double k2,
                          double phi_norm_p, double c_p) {
  check_rate_args(p, alpha, d);
  check_constants(k1, k2, phi_norm_p, c_p);
  const double q = conjugate(p);
  const double denom = alpha * q + static_cast<double>(d);
  const double bracket = 3.0 * d * phi_norm_p * c_p / (alpha * q * k1 * k2);
  return 3.0 * phi_norm_p * c_p * std::pow(bracket, -static_cast<double>(d) / denom) +
         k1 * k2 * std::pow(bracket, alpha * q / denom);
}

MixtureModel maurey_sample(const targets::TargetDensity& f0,
                           const kernels::KernelDensity& kernel, double nu, std::size_t m,
                           std::uint64_t seed) {
  if (m == 0) throw InvalidParameter("component count m must be positive");
  if (kernel.dim() != f0.dim())
    throw InvalidParameter("kernel and target dimensions do not match");
  std::mt19937_64 rng(seed);
  const int d = f0.dim();
  std::vector<double> locations(m * static_cast<std::size_t>(d));
  for (std::size_t j = 0; j < m; ++j)
    f0.sample(rng, std::span<double>(locations.data() + j * d, d));
  std::vector<double> weights(m, 1.0 / static_cast<double>(m));
  return MixtureModel(kernel, nu, std::move(weights), std::move(locations));
}

MixtureModel greedy_refine(const MixtureModel& init, const analysis::PointFn& reference,
                           double p, const analysis::QuadratureSpec& quad, int steps,
                           const std::vector<std::vector<double>>& candidate_locations,
                           std::vector<double>* objective_trace) {
  if (p != 2.0)
    throw InvalidParameter("greedy_refine is implemented for p = 2 only");
  if (steps < 0) throw InvalidParameter("steps must be nonnegative");
  if (candidate_locations.empty())
    throw InvalidParameter("greedy_refine needs a non-empty candidate location grid");
  const int d = init.dim();
  for (const auto& c : candidate_locations)
    if (static_cast<int>(c.size()) != d)
      throw InvalidParameter("candidate location has wrong dimension");

  const TensorGrid grid = TensorGrid::from(quad);
  const auto ref_vals = grid.evaluate(reference);

  // Current mixture state: atom list, weights, and values on the grid.
  std::vector<std::vector<double>> atoms;
  std::vector<double> weights = init.weights();
  for (std::size_t j = 0; j < init.size(); ++j) {
    const auto loc = init.location(j);
    atoms.emplace_back(loc.begin(), loc.end());
  }
  auto mixture_fn = [&](std::span<const double> x) { return init(x); };
  std::vector<double> f_vals = grid.evaluate(mixture_fn);

  // Candidate atom values on the grid, computed once.
  const kernels::DilatedKernel dk = kernels::dilate(init.kernel(), init.nu());
  std::vector<std::vector<double>> cand_vals(candidate_locations.size());
  std::vector<double> shifted(d);
  for (std::size_t c = 0; c < candidate_locations.size(); ++c) {
    cand_vals[c].resize(grid.size);
    for (std::size_t i = 0; i < grid.size; ++i) {
      const auto x = grid.point(i);
      for (int k = 0; k < d; ++k) shifted[k] = x[k] - candidate_locations[c][k];
      cand_vals[c][i] = dk(shifted);
    }
  }

  std::vector<double> resid(grid.size);
  auto refresh_resid = [&]() {
    for (std::size_t i = 0; i < grid.size; ++i) resid[i] = f_vals[i] - ref_vals[i];
  };
  refresh_resid();
  double objective = grid.inner(resid, resid);
  if (objective_trace) objective_trace->push_back(objective);

  for (int step = 0; step < steps; ++step) {
    // J(gamma) = J0 + 2 gamma <resid, g - f> + gamma^2 ||g - f||^2 along the
    // segment toward candidate atom g; exact minimizer clamped to [0, 1].
    double best_new = objective;
    double best_gamma = 0.0;
    std::ptrdiff_t best_c = -1;
    for (std::size_t c = 0; c < cand_vals.size(); ++c) {
      const auto& g = cand_vals[c];
      double b = 0.0, a = 0.0;
      for (std::size_t i = 0; i < grid.size; ++i) {
        const double diff = g[i] - f_vals[i];
        b += grid.weights[i] * resid[i] * diff;
        a += grid.weights[i] * diff * diff;
      }
      double gamma = 0.0;
      if (a > 0.0) gamma = std::min(1.0, std::max(0.0, -b / a));
      else if (b < 0.0) gamma = 1.0;
      const double j_new = objective + 2.0 * gamma * b + gamma * gamma * a;
      if (j_new < best_new - 1e-15 * std::max(1.0, objective)) {
        best_new = j_new;
        best_gamma = gamma;
        best_c = static_cast<std::ptrdiff_t>(c);
      }
    }
    if (best_c < 0 || best_gamma == 0.0) break;  // no candidate improves

    const auto& chosen = candidate_locations[static_cast<std::size_t>(best_c)];
    for (auto& w : weights) w *= 1.0 - best_gamma;
    auto found = std::find(atoms.begin(), atoms.end(), chosen);
    if (found == atoms.end()) {
      atoms.push_back(chosen);
      weights.push_back(best_gamma);
    } else {
      weights[static_cast<std::size_t>(found - atoms.begin())] += best_gamma;
    }
    const auto& g = cand_vals[static_cast<std::size_t>(best_c)];
    for (std::size_t i = 0; i < grid.size; ++i)
      f_vals[i] = (1.0 - best_gamma) * f_vals[i] + best_gamma * g[i];
    refresh_resid();
    objective = grid.inner(resid, resid);
    if (objective_trace) objective_trace->push_back(objective);
  }

  // Drop zero-weight atoms and renormalize away accumulated rounding.
  std::vector<double> out_w;
  std::vector<double> out_loc;
  double sum = 0.0;
  for (double w : weights) sum += w;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    if (weights[j] <= 0.0) continue;
    out_w.push_back(weights[j] / sum);
    out_loc.insert(out_loc.end(), atoms[j].begin(), atoms[j].end());
  }
  return MixtureModel(init.kernel(), init.nu(), std::move(out_w), std::move(out_loc));
}

harness::RateReport approx_rate_experiment(const ApproxRateConfig& config) {
  if (config.m_grid.size() < 3)
    throw InsufficientData("approx_rate_experiment needs at least 3 component counts; got " +
                           std::to_string(config.m_grid.size()));
  for (std::size_t i = 1; i < config.m_grid.size(); ++i)
    if (config.m_grid[i] <= config.m_grid[i - 1])
      throw InvalidParameter("m grid must be strictly increasing");
  if (config.trials < 1) throw InvalidParameter("trials must be at least 1");
  const double p = config.p;
  if (!(p > 1.0)) throw InvalidParameter("approximation experiments require p > 1");

  const auto& kernel = config.kernel;
  const auto& target = config.target;
  const double alpha = config.alpha.value_or(target.smoothness().alpha);
  const double c_p = config.c_p.value_or(p == 2.0 ? 1.0 : 2.0);
  const int d = kernel.dim();

  // Provisional box for resolving constants, then a final box sized for the
  // widest kernel in the sweep (smallest nu).
  const analysis::QuadratureSpec probe_quad =
      config.quad ? *config.quad : analysis::default_quadrature(kernel, target, 1.0);
  const double k1 = kernels::kernel_moment(kernel, alpha, probe_quad);
  const auto k2_opt = targets::resolve_k2(target, p, probe_quad);
  if (!k2_opt)
    throw UnsupportedTarget("target '" + target.name() +
                            "' has no usable smoothness constant; run estimate_smoothness "
                            "and attach the result before the experiment");
  const double k2 = *k2_opt;
  const double phi_p = kernel.lp_norm_hook(p).value_or(
      kernels::dilated_lp_norm(kernel, 1.0, p, probe_quad));

  const double nu_front = optimal_nu(config.m_grid.front(), p, alpha, d, k1, k2, phi_p, c_p);
  const analysis::QuadratureSpec quad =
      config.quad ? *config.quad
                  : analysis::default_quadrature(kernel, target, std::min(1.0, nu_front));

  harness::RateReport report;
  report.experiment = "approx_rate";
  report.theoretical_exponent = rate_exponent(p, alpha, d);
  report.constant_k = theorem_constant_k(p, alpha, d, k1, k2, phi_p, c_p);
  report.constants_certified = (p == 2.0 && c_p == 1.0);
  report.notes.push_back("alpha=" + std::to_string(alpha) + " K1=" + std::to_string(k1) +
                         " K2=" + std::to_string(k2) + " |phi|_p=" + std::to_string(phi_p) +
                         " C_p=" + std::to_string(c_p));

  const TensorGrid grid =
      quad.mode == analysis::QuadratureMode::tensor_grid ? TensorGrid::from(quad) : TensorGrid{};
  std::vector<double> target_vals;
  if (grid.size > 0)
    target_vals = grid.evaluate([&](std::span<const double> x) { return target(x); });

  for (std::size_t mi = 0; mi < config.m_grid.size(); ++mi) {
    const std::size_t m = config.m_grid[mi];
    const double nu = optimal_nu(m, p, alpha, d, k1, k2, phi_p, c_p);

    std::vector<double> errors(static_cast<std::size_t>(config.trials));
    parallel_for(errors.size(), config.threads, [&](std::size_t t) {
      const std::uint64_t seed = derive_seed(config.seed, mi + 1, t);
      const MixtureModel mix = maurey_sample(target, kernel, nu, m, seed);
      if (grid.size > 0) {
        std::vector<double> mix_vals(grid.size);
        for (std::size_t i = 0; i < grid.size; ++i) mix_vals[i] = mix(grid.point(i));
        errors[t] = grid.lp_distance(mix_vals, target_vals, p);
      } else {
        errors[t] = analysis::lp_distance([&](std::span<const double> x) { return mix(x); },
                                          [&](std::span<const double> x) { return target(x); },
                                          p, quad);
      }
    });

    harness::RateRow row;
    row.size = static_cast<double>(m);
    row.nu = nu;
    row.trials = static_cast<std::uint64_t>(config.trials);
    const double n_tr = static_cast<double>(config.trials);
    const double mean = pairwise_sum(errors) / n_tr;
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    var = config.trials > 1 ? var / (n_tr - 1.0) : 0.0;
    row.mean_error = mean;
    row.std_error = std::sqrt(var / n_tr);
    row.best_error = *std::min_element(errors.begin(), errors.end());
    row.bound =
        report.constant_k * std::pow(static_cast<double>(m), report.theoretical_exponent);
    row.bound_certified = report.constants_certified;
    row.bound_ok = mean <= row.bound * (1.0 + 1e-3) + 1e-9;
    report.rows.push_back(row);
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

}  // namespace mixrate::approx
