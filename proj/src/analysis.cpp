#include "mixrate/analysis.hpp"

#include <cmath>
#include <numbers>

namespace mixrate::analysis {

namespace {

constexpr double kPi = std::numbers::pi;

double normal_pdf_var(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * kPi * var);
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(int dim, std::vector<double> flat, std::uint64_t seed)
    : dim_(dim), flat_(std::move(flat)), seed_(seed) {
  if (dim_ < 1) throw InvalidParameter("empirical measure dimension must be positive");
  if (flat_.empty() || flat_.size() % static_cast<std::size_t>(dim_) != 0)
    throw InvalidParameter("empirical measure needs at least one complete point");
  n_ = flat_.size() / static_cast<std::size_t>(dim_);
  for (double v : flat_)
    if (!std::isfinite(v))
      throw InvalidParameter("empirical measure contains a non-finite coordinate");
}

EmpiricalMeasure EmpiricalMeasure::draw(const targets::TargetDensity& f0, std::size_t n,
                                        std::uint64_t seed) {
  if (n == 0) throw InvalidParameter("cannot draw an empty sample");
  std::mt19937_64 rng(seed);
  std::vector<double> flat(n * static_cast<std::size_t>(f0.dim()));
  for (std::size_t i = 0; i < n; ++i)
    f0.sample(rng, std::span<double>(flat.data() + i * f0.dim(), f0.dim()));
  return EmpiricalMeasure(f0.dim(), std::move(flat), seed);
}

std::span<const double> EmpiricalMeasure::point(std::size_t i) const {
  if (i >= n_) throw InvalidParameter("empirical measure point index out of range");
  return std::span<const double>(flat_.data() + i * static_cast<std::size_t>(dim_),
                                 static_cast<std::size_t>(dim_));
}

double empirical_mean(const EmpiricalMeasure& mu, const PointFn& f) {
  const double total =
      pairwise_sum_fn(mu.size(), [&](std::size_t i) { return f(mu.point(i)); });
  return total / static_cast<double>(mu.size());
}

double lp_norm(const PointFn& f, double p, const QuadratureSpec& quad) {
  if (!(p >= 1.0)) throw InvalidParameter("Lp norm requires p >= 1");
  const double integral =
      integrate([&](std::span<const double> x) { return std::pow(std::abs(f(x)), p); }, quad);
  return std::pow(integral, 1.0 / p);
}

double lp_distance(const PointFn& f, const PointFn& g, double p, const QuadratureSpec& quad) {
  if (!(p >= 1.0)) throw InvalidParameter("Lp distance requires p >= 1");
  const double integral = integrate(
      [&](std::span<const double> x) { return std::pow(std::abs(f(x) - g(x)), p); }, quad);
  return std::pow(integral, 1.0 / p);
}

PointFn convolution(const kernels::DilatedKernel& kernel, const targets::TargetDensity& f0,
                    int inner_points) {
  if (kernel.dim() != f0.dim())
    throw InvalidParameter("kernel and target dimensions do not match");
  const int d = kernel.dim();

  // Gaussian kernel against a Gaussian mixture: exact componentwise form,
  // N(c_k, sigma_k^2 + 1/nu^2) per axis.
  if (kernel.base().name() == "gaussian" && f0.gaussian_components() != nullptr) {
    const auto comps = *f0.gaussian_components();
    const double nu = kernel.nu();
    const double kernel_var = 1.0 / (nu * nu);
    return [comps, kernel_var, d](std::span<const double> x) {
      double v = 0.0;
      for (const auto& c : comps) {
        const double var = c.sigma * c.sigma + kernel_var;
        double g = c.weight;
        for (int i = 0; i < d; ++i) g *= normal_pdf_var(x[i], c.center, var);
        v += g;
      }
      return v;
    };
  }

  // Numeric inner integral over the dilated kernel's effective support.
  const double r = kernel.axis_effective_radius();
  auto base = kernel;
  if (d == 1) {
    return [base, f0, r, inner_points](std::span<const double> x) {
      const double c = x[0];
      return simpson_1d(
          [&](double y) {
            const double yy[1] = {y};
            const double xy[1] = {c - y};
            return base(std::span<const double>(yy, 1)) *
                   f0(std::span<const double>(xy, 1));
          },
          -r, r, inner_points);
    };
  }
  return [base, f0, r, d, inner_points](std::span<const double> x) {
    QuadratureSpec inner = QuadratureSpec::symmetric_box(d, r, std::max(17, inner_points));
    std::vector<double> shifted(d);
    std::vector<double> center(x.begin(), x.end());
    return integrate(
        [&](std::span<const double> y) {
          for (int i = 0; i < d; ++i) shifted[i] = center[i] - y[i];
          return base(y) * f0(shifted);
        },
        inner);
  };
}

double convolve(const kernels::DilatedKernel& kernel, const targets::TargetDensity& f0,
                std::span<const double> x, int inner_points) {
  return convolution(kernel, f0, inner_points)(x);
}

SmoothingError smoothing_error(const targets::TargetDensity& f0,
                               const kernels::KernelDensity& kernel, double nu, double p,
                               const QuadratureSpec& quad) {
  if (!(nu > 0.0)) throw InvalidParameter("nu must be positive");
  if (!(p >= 1.0)) throw InvalidParameter("smoothing error requires p >= 1");
  quad.validate();

  const double alpha = f0.smoothness().alpha;
  const auto k2 = targets::resolve_k2(f0, p, quad);
  if (!k2)
    throw UnsupportedTarget(
        "target '" + f0.name() +
        "' has no usable smoothness constant K2; run estimate_smoothness and attach the "
        "result with set_smoothness before computing smoothing errors");
  const double k1 = kernels::kernel_moment(kernel, alpha, quad);

  const auto conv = convolution(kernels::dilate(kernel, nu), f0);
  auto f0_fn = [&f0](std::span<const double> x) { return f0(x); };

  SmoothingError out;
  out.measured = lp_distance(conv, f0_fn, p, quad);
  out.k1 = k1;
  out.k2 = *k2;
  out.nu = nu;
  out.alpha = alpha;
  out.bound = k1 * *k2 * std::pow(nu, -alpha);
  return out;
}

QuadratureSpec default_quadrature(const kernels::KernelDensity& kernel,
                                  const targets::TargetDensity& f0, double min_nu,
                                  std::uint64_t seed) {
  if (!(min_nu > 0.0)) throw InvalidParameter("min_nu must be positive");
  const int d = kernel.dim();
  if (d != f0.dim()) throw InvalidParameter("kernel and target dimensions do not match");
  const double radius =
      std::max(f0.axis_effective_radius(), kernel.axis_effective_radius() / min_nu) +
      6.0 / min_nu;
  if (d == 1) return QuadratureSpec::symmetric_box(1, radius, 4096);
  if (d == 2) return QuadratureSpec::symmetric_box(2, radius, 256);
  return QuadratureSpec::monte_carlo_box(d, radius, 65536, seed);
}

}  // namespace mixrate::analysis
