#include "mixrate/targets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

namespace mixrate::targets {

namespace {

constexpr double kPi = std::numbers::pi;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * kPi);
constexpr double kGaussianCut = 9.0;  // per-axis tail cut in units of sigma
constexpr double kLaplaceCut = 18.0;  // tail mass ~1.5e-8 per side

double normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

// Inverse CDF of the standard Laplace density exp(-|x|)/2.
double laplace_quantile(double u) {
  u = std::min(std::max(u, 1e-300), 1.0 - 1e-16);
  if (u < 0.5) return std::log(2.0 * u);
  return -std::log(2.0 * (1.0 - u));
}

std::vector<GaussianComponent> checked_mixture(const TargetParams& params) {
  if (params.weights.empty() || params.weights.size() != params.sigmas.size())
    throw InvalidParameter("gaussian_mixture needs matching non-empty weights and sigmas");
  if (!params.centers.empty() && params.centers.size() != params.weights.size())
    throw InvalidParameter("gaussian_mixture centers must match weights in length");
  double wsum = 0.0;
  std::vector<GaussianComponent> comps;
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    if (!(params.weights[k] >= 0.0)) throw InvalidParameter("mixture weights must be >= 0");
    if (!(params.sigmas[k] > 0.0)) throw InvalidParameter("mixture sigmas must be positive");
    GaussianComponent c;
    c.weight = params.weights[k];
    c.sigma = params.sigmas[k];
    c.center = params.centers.empty() ? 0.0 : params.centers[k];
    comps.push_back(c);
    wsum += c.weight;
  }
  if (!(std::abs(wsum - 1.0) <= 1e-9))
    throw InvalidParameter("mixture weights must sum to 1 (got " + std::to_string(wsum) + ")");
  return comps;
}

TargetDensity make_gaussian_mixture(int dim, std::vector<GaussianComponent> comps,
                                    std::string name) {
  double axis_radius = 0.0;
  for (const auto& c : comps)
    axis_radius = std::max(axis_radius, std::abs(c.center) + kGaussianCut * c.sigma);

  auto eval = [comps, dim](std::span<const double> x) {
    double v = 0.0;
    for (const auto& c : comps) {
      double g = c.weight;
      for (int i = 0; i < dim; ++i) g *= normal_pdf(x[i], c.center, c.sigma);
      v += g;
    }
    return v;
  };
  auto sampler = [comps, dim](std::mt19937_64& rng, std::span<double> out) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double acc = 0.0;
    const GaussianComponent* pick = &comps.back();
    for (const auto& c : comps) {
      acc += c.weight;
      if (u <= acc) {
        pick = &c;
        break;
      }
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < dim; ++i) out[i] = pick->center + pick->sigma * normal(rng);
  };

  SmoothnessSpec spec{1.0, std::nullopt, SmoothnessKind::w1p};
  TargetDensity t(std::move(name), dim, std::move(eval), std::move(sampler), axis_radius,
                  spec);

  auto comps_copy = comps;
  t.set_gradient([comps_copy, dim](std::span<const double> x, std::span<double> out) {
    for (int i = 0; i < dim; ++i) out[i] = 0.0;
    for (const auto& c : comps_copy) {
      double g = c.weight;
      for (int i = 0; i < dim; ++i) g *= normal_pdf(x[i], c.center, c.sigma);
      for (int i = 0; i < dim; ++i)
        out[i] += g * (-(x[i] - c.center) / (c.sigma * c.sigma));
    }
  });
  t.set_gaussian_components(comps);

  // Per-axis sampling moments of the mixture (axes are exchangeable).
  AxisMoments m;
  m.mean = 0.0;
  for (const auto& c : comps) m.mean += c.weight * c.center;
  double var = 0.0, m4 = 0.0;
  for (const auto& c : comps) {
    const double dc = c.center - m.mean;
    var += c.weight * (c.sigma * c.sigma + dc * dc);
  }
  for (const auto& c : comps) {
    const double dc = c.center - m.mean;
    const double s2 = c.sigma * c.sigma;
    m4 += c.weight * (3.0 * s2 * s2 + 6.0 * s2 * dc * dc + dc * dc * dc * dc);
  }
  m.var = var;
  m.fourth_central = m4;
  t.set_axis_moments(m);

  if (comps.size() == 1) {
    const double sigma = comps[0].sigma;
    const int d = dim;
    t.set_analytic_w1p([sigma, d](double p) {
      // [ sigma^(-2p) (2 pi sigma^2)^(-dp/2) pi^(d/2) Gamma((p+d)/2) /
      //   Gamma(d/2) (2 sigma^2 / p)^((p+d)/2) ]^(1/p)
      const double log_ip = 0.5 * d * std::log(kPi) + std::lgamma(0.5 * (p + d)) -
                            std::lgamma(0.5 * d) +
                            0.5 * (p + d) * std::log(2.0 * sigma * sigma / p);
      const double log_total = -2.0 * p * std::log(sigma) -
                               0.5 * d * p * std::log(2.0 * kPi * sigma * sigma) + log_ip;
      return std::exp(log_total / p);
    });
  }
  return t;
}

TargetDensity make_laplace(int dim) {
  auto eval = [dim](std::span<const double> x) {
    double v = 1.0;
    for (int i = 0; i < dim; ++i) v *= 0.5 * std::exp(-std::abs(x[i]));
    return v;
  };
  auto sampler = [dim](std::mt19937_64& rng, std::span<double> out) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < dim; ++i) out[i] = laplace_quantile(unif(rng));
  };
  SmoothnessSpec spec{1.0, std::nullopt, SmoothnessKind::w1p};
  TargetDensity t("laplace", dim, std::move(eval), std::move(sampler), kLaplaceCut, spec);

  t.set_gradient([dim](std::span<const double> x, std::span<double> out) {
    double f = 1.0;
    for (int i = 0; i < dim; ++i) f *= 0.5 * std::exp(-std::abs(x[i]));
    for (int i = 0; i < dim; ++i) out[i] = (x[i] >= 0.0 ? -1.0 : 1.0) * f;
  });
  const int d = dim;
  t.set_analytic_w1p([d](double p) {
    // ||grad f||_2 = sqrt(d) f a.e., so K2 = sqrt(d) [ int f^p ]^(1/p).
    return std::sqrt(static_cast<double>(d)) *
           std::pow(std::pow(0.5, p) * 2.0 / p, static_cast<double>(d) / p);
  });
  t.set_axis_moments({0.0, 2.0, 24.0});
  // Exact K2 for p = 2 confirms the formula: sqrt(d) (1/2)^d 1^d.
  SmoothnessSpec s2{1.0, t.analytic_w1p_constant(2.0), SmoothnessKind::w1p};
  t.set_smoothness(s2);
  return t;
}

TargetDensity make_uniform_box(int dim, double s) {
  if (!(s > 0.0 && s < 0.5))
    throw InvalidParameter(
        "uniform_box fractional order s must lie in (0, 1/2); got " + std::to_string(s));
  auto eval = [dim](std::span<const double> x) {
    for (int i = 0; i < dim; ++i)
      if (std::abs(x[i]) > 0.5) return 0.0;
    return 1.0;
  };
  auto sampler = [dim](std::mt19937_64& rng, std::span<double> out) {
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    for (int i = 0; i < dim; ++i) out[i] = unif(rng);
  };
  SmoothnessSpec spec{s, std::nullopt, SmoothnessKind::wsp};
  TargetDensity t("uniform_box", dim, std::move(eval), std::move(sampler), 0.5, spec);
  t.set_axis_moments({0.0, 1.0 / 12.0, 1.0 / 80.0});
  return t;
}

}  // namespace

TargetDensity::TargetDensity(std::string name, int dim, Evaluator eval, Sampler sampler,
                             double axis_radius, SmoothnessSpec smoothness)
    : name_(std::move(name)), dim_(dim), eval_(std::move(eval)), sampler_(std::move(sampler)),
      axis_radius_(axis_radius), smoothness_(std::move(smoothness)) {
  if (dim_ < 1) throw InvalidParameter("target dimension must be positive");
  if (!eval_) throw InvalidParameter("target needs an evaluator");
  if (!sampler_) throw InvalidParameter("target needs a sampler");
  if (!(axis_radius_ > 0.0) || !std::isfinite(axis_radius_))
    throw InvalidParameter("target effective radius must be positive and finite");
  if (!(smoothness_.alpha > 0.0 && smoothness_.alpha <= 1.0))
    throw InvalidParameter("smoothness alpha must lie in (0, 1]");
}

double TargetDensity::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw InvalidParameter("target evaluated at a point of wrong dimension");
  return eval_(x);
}

void TargetDensity::sample(std::mt19937_64& rng, std::span<double> out) const {
  if (static_cast<int>(out.size()) != dim_)
    throw InvalidParameter("sample output span has wrong dimension");
  sampler_(rng, out);
}

double TargetDensity::effective_support_radius() const {
  return axis_radius_ * std::sqrt(static_cast<double>(dim_));
}

void TargetDensity::gradient(std::span<const double> x, std::span<double> out) const {
  if (!gradient_)
    throw UnsupportedTarget("target '" + name_ + "' has no gradient evaluator");
  if (static_cast<int>(x.size()) != dim_ || out.size() != x.size())
    throw InvalidParameter("gradient called with wrong dimensions");
  gradient_(x, out);
}

std::optional<double> TargetDensity::analytic_w1p_constant(double p) const {
  if (!analytic_w1p_) return std::nullopt;
  return analytic_w1p_(p);
}

const std::vector<GaussianComponent>* TargetDensity::gaussian_components() const {
  return gaussian_components_.empty() ? nullptr : &gaussian_components_;
}

void TargetDensity::set_gaussian_components(std::vector<GaussianComponent> c) {
  gaussian_components_ = std::move(c);
}

TargetDensity make_target(const std::string& name, int dim, const TargetParams& params) {
  if (dim < 1) throw InvalidParameter("target dimension must be positive");
  if (name == "gaussian") {
    if (!(params.sigma > 0.0)) throw InvalidParameter("gaussian sigma must be positive");
    std::vector<GaussianComponent> comps{{1.0, params.center, params.sigma}};
    auto t = make_gaussian_mixture(dim, std::move(comps), "gaussian");
    SmoothnessSpec spec{1.0, t.analytic_w1p_constant(2.0), SmoothnessKind::w1p};
    t.set_smoothness(spec);
    return t;
  }
  if (name == "gaussian_mixture") {
    auto t = make_gaussian_mixture(dim, checked_mixture(params), "gaussian_mixture");
    return t;
  }
  if (name == "laplace") return make_laplace(dim);
  if (name == "uniform_box") return make_uniform_box(dim, params.s);
  if (name == "csv") {
    if (dim != 1) throw UnsupportedTarget("csv targets are 1-dimensional");
    return load_csv_target(params.csv_path);
  }
  throw UnsupportedTarget("unknown target '" + name +
                          "' (expected gaussian|gaussian_mixture|laplace|uniform_box|csv)");
}

TargetDensity load_csv_target(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open csv target file '" + path + "'");
  std::vector<double> xs, fs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x, f;
    if (!(row >> x >> f)) {
      if (line_no == 1) continue;  // header row
      throw InvalidParameter("csv target '" + path + "': cannot parse line " +
                             std::to_string(line_no));
    }
    if (!std::isfinite(x) || !std::isfinite(f) || f < 0.0)
      throw InvalidParameter("csv target '" + path + "': invalid value on line " +
                             std::to_string(line_no));
    xs.push_back(x);
    fs.push_back(f);
  }
  if (xs.size() < 8)
    throw InsufficientData("csv target '" + path + "' needs at least 8 rows");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1]))
      throw InvalidParameter("csv target '" + path + "': x values must be strictly increasing");

  // Renormalize the tabulated density to unit mass under the trapezoid rule.
  double mass = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    mass += 0.5 * (fs[i] + fs[i - 1]) * (xs[i] - xs[i - 1]);
  if (!(mass > 0.0)) throw InvalidParameter("csv target '" + path + "' has zero mass");
  for (auto& f : fs) f /= mass;

  // Cumulative trapezoid CDF at the knots for inverse-CDF sampling.
  std::vector<double> cdf(xs.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i)
    cdf[i] = cdf[i - 1] + 0.5 * (fs[i] + fs[i - 1]) * (xs[i] - xs[i - 1]);
  cdf.back() = 1.0;

  auto shared_x = std::make_shared<std::vector<double>>(std::move(xs));
  auto shared_f = std::make_shared<std::vector<double>>(std::move(fs));
  auto shared_c = std::make_shared<std::vector<double>>(std::move(cdf));

  auto eval = [shared_x, shared_f](std::span<const double> p) {
    const auto& x = *shared_x;
    const auto& f = *shared_f;
    const double t = p[0];
    if (t <= x.front() || t >= x.back()) {
      if (t == x.front()) return f.front();
      if (t == x.back()) return f.back();
      return 0.0;
    }
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return f[i - 1] + w * (f[i] - f[i - 1]);
  };
  auto sampler = [shared_x, shared_f, shared_c](std::mt19937_64& rng, std::span<double> out) {
    const auto& x = *shared_x;
    const auto& f = *shared_f;
    const auto& c = *shared_c;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = std::min(std::max(unif(rng), 1e-12), 1.0 - 1e-12);
    const auto it = std::upper_bound(c.begin(), c.end(), u);
    std::size_t i = static_cast<std::size_t>(it - c.begin());
    i = std::min(std::max<std::size_t>(i, 1), c.size() - 1);
    const double h = x[i] - x[i - 1];
    const double f0 = f[i - 1], f1 = f[i];
    const double du = u - c[i - 1];
    // Density is linear on the cell, CDF quadratic: solve
    // f0 t + (f1-f0) t^2 / 2 = du / h for t in [0, 1].
    const double a = 0.5 * (f1 - f0), b = f0, rhs = du / h;
    double t;
    if (std::abs(a) < 1e-14 * std::max(1.0, std::abs(b))) {
      t = b > 0.0 ? rhs / b : 0.5;
    } else {
      const double disc = std::max(0.0, b * b + 4.0 * a * rhs);
      t = (-b + std::sqrt(disc)) / (2.0 * a);
    }
    t = std::min(std::max(t, 0.0), 1.0);
    out[0] = x[i - 1] + t * h;
  };

  const double radius = std::max(std::abs(shared_x->front()), std::abs(shared_x->back()));
  SmoothnessSpec spec{1.0, std::nullopt, SmoothnessKind::empirical};
  TargetDensity t("csv", 1, std::move(eval), std::move(sampler), radius, spec);

  // Tabulated per-axis moments, for sampler validation.
  const auto& xv = *shared_x;
  const auto& fv = *shared_f;
  auto table_integral = [&](auto&& g) {
    double s = 0.0;
    for (std::size_t i = 1; i < xv.size(); ++i)
      s += 0.5 * (g(xv[i]) * fv[i] + g(xv[i - 1]) * fv[i - 1]) * (xv[i] - xv[i - 1]);
    return s;
  };
  AxisMoments m;
  m.mean = table_integral([](double x) { return x; });
  const double mean = m.mean;
  m.var = table_integral([mean](double x) { return (x - mean) * (x - mean); });
  m.fourth_central = table_integral([mean](double x) { return std::pow(x - mean, 4); });
  t.set_axis_moments(m);
  return t;
}

double translation_modulus(const TargetDensity& f0, std::span<const double> y, double p,
                           const analysis::QuadratureSpec& quad) {
  if (!(p >= 1.0)) throw InvalidParameter("translation modulus requires p >= 1");
  if (static_cast<int>(y.size()) != f0.dim())
    throw InvalidParameter("shift vector has wrong dimension");
  quad.validate();
  if (quad.dim() != f0.dim())
    throw InvalidParameter("quadrature dimension does not match target dimension");

  const double r = f0.axis_effective_radius();
  for (int i = 0; i < f0.dim(); ++i) {
    const double need_lo = -r + std::min(0.0, y[i]);
    const double need_hi = r + std::max(0.0, y[i]);
    if (quad.lo[i] > need_lo || quad.hi[i] < need_hi)
      throw DomainError("quadrature box does not cover the target support and its shift "
                        "on axis " + std::to_string(i) +
                        " (need [" + std::to_string(need_lo) + ", " +
                        std::to_string(need_hi) + "])");
  }

  std::vector<double> shifted(y.size());
  const double integral = analysis::integrate(
      [&](std::span<const double> x) {
        for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] - y[i];
        return std::pow(std::abs(f0(shifted) - f0(x)), p);
      },
      quad);
  return std::pow(integral, 1.0 / p);
}

double sobolev_w1p_constant(const TargetDensity& f0, double p,
                            const analysis::QuadratureSpec& quad) {
  if (!(p >= 1.0)) throw InvalidParameter("Sobolev constant requires p >= 1");
  if (!f0.has_gradient())
    throw UnsupportedTarget("target '" + f0.name() +
                            "' is not W^{1,p}: no gradient evaluator is available "
                            "(use estimate_smoothness or fractional_seminorm instead)");
  quad.validate();
  if (quad.dim() != f0.dim())
    throw InvalidParameter("quadrature dimension does not match target dimension");
  std::vector<double> g(f0.dim());
  const double integral = analysis::integrate(
      [&](std::span<const double> x) {
        f0.gradient(x, g);
        double n2 = 0.0;
        for (double gi : g) n2 += gi * gi;
        return std::pow(std::sqrt(n2), p);
      },
      quad);
  return std::pow(integral, 1.0 / p);
}

namespace {

// Double-integral seminorm with the tensor trapezoid rule at a given
// per-axis resolution; cells closer than half a grid step are excluded.
double seminorm_power_at(const TargetDensity& f0, double s, double p,
                         const analysis::QuadratureSpec& quad, int points) {
  const int d = f0.dim();
  std::vector<analysis::AxisRule> axes;
  for (int i = 0; i < d; ++i) axes.push_back(analysis::axis_rule(quad.lo[i], quad.hi[i], points));

  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= axes[i].nodes.size();

  // Precompute values and combined weights on the flattened grid.
  std::vector<double> val(n), wgt(n);
  std::vector<std::vector<double>> coords(n, std::vector<double>(d));
  std::vector<double> x(d);
  for (std::size_t idx = 0; idx < n; ++idx) {
    std::size_t rem = idx;
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const std::size_t k = rem % axes[i].nodes.size();
      rem /= axes[i].nodes.size();
      x[i] = axes[i].nodes[k];
      w *= axes[i].weights[k];
    }
    coords[idx] = x;
    val[idx] = f0(x);
    wgt[idx] = w;
  }

  double h = 0.0;
  for (int i = 0; i < d; ++i)
    h = std::max(h, (quad.hi[i] - quad.lo[i]) / static_cast<double>(points - 1));
  const double cutoff2 = 0.25 * h * h;
  const double expo = static_cast<double>(d) + s * p;

  return pairwise_sum_fn(n, [&](std::size_t i) {
    const auto& xi = coords[i];
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double dist2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double dk = xi[k] - coords[j][k];
        dist2 += dk * dk;
      }
      if (dist2 < cutoff2) continue;
      const double diff = std::abs(val[i] - val[j]);
      if (diff == 0.0) continue;
      row += wgt[j] * std::pow(diff, p) / std::pow(std::sqrt(dist2), expo);
    }
    return wgt[i] * row;
  });
}

}  // namespace

SeminormEstimate fractional_seminorm(const TargetDensity& f0, double s, double p,
                                     const analysis::QuadratureSpec& quad) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidParameter("fractional order s must lie in (0, 1)");
  if (!(p >= 1.0)) throw InvalidParameter("fractional seminorm requires p >= 1");
  quad.validate();
  if (quad.dim() != f0.dim())
    throw InvalidParameter("quadrature dimension does not match target dimension");
  const int d = f0.dim();
  if (d > 2)
    throw InvalidParameter("fractional_seminorm supports d in {1, 2} only");

  // The pair loop is quadratic in grid size; cap the per-axis resolution.
  const int cap = d == 1 ? 4096 : 96;
  const int points = std::min(quad.points_per_axis, cap);

  const double full = seminorm_power_at(f0, s, p, quad, points);
  const double half = seminorm_power_at(f0, s, p, quad, std::max(16, points / 2));
  SeminormEstimate est;
  est.value = std::pow(full, 1.0 / p);
  est.error_estimate = std::abs(est.value - std::pow(half, 1.0 / p));
  return est;
}

SmoothnessSpec estimate_smoothness(const TargetDensity& f0, double p,
                                   const std::vector<std::vector<double>>& shift_grid,
                                   const analysis::QuadratureSpec& quad) {
  if (shift_grid.size() < 4)
    throw InsufficientData("estimate_smoothness needs at least 4 shifts; got " +
                           std::to_string(shift_grid.size()));
  const double max_norm = f0.effective_support_radius() / 4.0;

  std::vector<double> log_norm, log_mod;
  for (const auto& y : shift_grid) {
    if (static_cast<int>(y.size()) != f0.dim())
      throw InvalidParameter("shift vector has wrong dimension");
    double n2 = 0.0;
    for (double yi : y) n2 += yi * yi;
    const double norm = std::sqrt(n2);
    if (norm <= 0.0 || norm > max_norm) continue;  // outside the trusted fit window
    const double mod = translation_modulus(f0, y, p, quad);
    if (!(mod > 0.0)) continue;
    log_norm.push_back(std::log(norm));
    log_mod.push_back(std::log(mod));
  }
  if (log_norm.size() < 4)
    throw InsufficientData(
        "estimate_smoothness has fewer than 4 usable shifts after filtering "
        "(shift norms must lie in (0, effective_support_radius/4])");

  const double lo = *std::min_element(log_norm.begin(), log_norm.end());
  const double hi = *std::max_element(log_norm.begin(), log_norm.end());
  if (hi - lo < 1e-9)
    throw InsufficientData("estimate_smoothness shift grid is degenerate: "
                           "all shifts share the same norm");

  // Ordinary least squares for log modulus = log K2 + alpha log ||y||.
  const std::size_t n = log_norm.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += log_norm[i];
    my += log_mod[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (log_norm[i] - mx) * (log_norm[i] - mx);
    sxy += (log_norm[i] - mx) * (log_mod[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;

  SmoothnessSpec spec;
  spec.alpha = std::min(1.0, std::max(0.01, slope));
  spec.k2 = std::exp(intercept);
  spec.kind = SmoothnessKind::empirical;
  return spec;
}

std::optional<double> resolve_k2(const TargetDensity& f0, double p,
                                 const analysis::QuadratureSpec& quad) {
  if (auto k = f0.analytic_w1p_constant(p)) return k;
  if (f0.has_gradient()) return sobolev_w1p_constant(f0, p, quad);
  if (f0.smoothness().kind == SmoothnessKind::wsp)
    return fractional_seminorm(f0, f0.smoothness().alpha, p, quad).value;
  if (f0.smoothness().k2) return f0.smoothness().k2;
  return std::nullopt;
}

}  // namespace mixrate::targets
