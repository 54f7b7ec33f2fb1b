#include "mixrate/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mixrate::kernels {

namespace {

constexpr double kPi = std::numbers::pi;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * kPi);
// Truncation half-width for the standard Gaussian profile; the tail mass
// beyond it is below 1e-18.
constexpr double kGaussianCut = 9.0;

Profile1d gaussian_profile() {
  Profile1d p;
  p.eval = [](double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); };
  p.sup = kInvSqrt2Pi;
  p.support = kInf;
  p.lp_norm = [](double q) {
    // ||phi||_p = (2 pi)^((1-p)/(2p)) p^(-1/(2p))
    return std::exp(((1.0 - q) / (2.0 * q)) * std::log(2.0 * kPi) -
                    std::log(q) / (2.0 * q));
  };
  p.moment = [](double a) {
    // E|Z|^a = 2^(a/2) Gamma((a+1)/2) / sqrt(pi)
    return std::exp(0.5 * a * std::log(2.0) + std::lgamma(0.5 * (a + 1.0)) -
                    0.5 * std::log(kPi));
  };
  p.self_conv = [](double t) {
    return std::exp(-0.25 * t * t) / std::sqrt(4.0 * kPi);
  };
  return p;
}

Profile1d uniform_profile() {
  Profile1d p;
  p.eval = [](double t) { return std::abs(t) <= 0.5 ? 1.0 : 0.0; };
  p.sup = 1.0;
  p.support = 0.5;
  p.lp_norm = [](double) { return 1.0; };
  p.moment = [](double a) { return std::pow(2.0, -a) / (a + 1.0); };
  p.self_conv = [](double t) { return std::max(0.0, 1.0 - std::abs(t)); };
  return p;
}

Profile1d triangular_profile() {
  Profile1d p;
  p.eval = [](double t) { return std::max(0.0, 1.0 - std::abs(t)); };
  p.sup = 1.0;
  p.support = 1.0;
  p.lp_norm = [](double q) { return std::pow(2.0 / (q + 1.0), 1.0 / q); };
  p.moment = [](double a) { return 2.0 / ((a + 1.0) * (a + 2.0)); };
  p.self_conv = [](double t) {
    // Triangular = box * box, so the self-convolution is the centered cubic
    // B-spline on [-2, 2].
    const double a = std::abs(t);
    if (a >= 2.0) return 0.0;
    if (a <= 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
    const double u = 2.0 - a;
    return u * u * u / 6.0;
  };
  return p;
}

Profile1d epanechnikov_profile() {
  Profile1d p;
  p.eval = [](double t) { return std::abs(t) <= 1.0 ? 0.75 * (1.0 - t * t) : 0.0; };
  p.sup = 0.75;
  p.support = 1.0;
  p.lp_norm = [](double q) {
    // int_0^1 (1-t^2)^p dt = sqrt(pi) Gamma(p+1) / (2 Gamma(p+3/2))
    const double log_int =
        0.5 * std::log(kPi) + std::lgamma(q + 1.0) - std::lgamma(q + 1.5);
    return 0.75 * std::exp(log_int / q);
  };
  p.moment = [](double a) { return 3.0 / ((a + 1.0) * (a + 3.0)); };
  p.self_conv = [](double t) {
    // (9/16) int_{a-1}^{1} (1-u^2)(1-(u-a)^2) du for a = |t| <= 2, via the
    // antiderivative F of the expanded quartic.
    const double a = std::abs(t);
    if (a >= 2.0) return 0.0;
    const auto F = [a](double u) {
      return (1.0 - a * a) * u + a * u * u - (2.0 - a * a) * u * u * u / 3.0 -
             0.5 * a * u * u * u * u + std::pow(u, 5) / 5.0;
    };
    return (9.0 / 16.0) * (F(1.0) - F(a - 1.0));
  };
  return p;
}

}  // namespace

KernelDensity::KernelDensity(std::string name, int dim, Profile1d profile, double vc_dim,
                             bool symmetric)
    : name_(std::move(name)), dim_(dim), profile_(std::move(profile)), vc_dim_(vc_dim),
      symmetric_(symmetric) {
  if (dim_ < 1) throw InvalidParameter("kernel dimension must be positive");
  if (!profile_.eval) throw InvalidParameter("kernel profile needs an evaluator");
  if (!(vc_dim_ > 0.0)) throw InvalidParameter("vc_dim must be positive");
  sup_norm_ = std::pow(profile_.sup, dim_);
  axis_support_ = profile_.support;
}

KernelDensity KernelDensity::custom(std::string name, int dim,
                                    std::function<double(std::span<const double>)> eval,
                                    double sup_norm, double support_radius, double vc_dim,
                                    bool symmetric) {
  KernelDensity k;
  k.name_ = std::move(name);
  k.dim_ = dim;
  k.custom_eval_ = std::move(eval);
  k.sup_norm_ = sup_norm;
  k.custom_support_radius_ = support_radius;
  k.axis_support_ = support_radius;  // box hull of the l2 ball
  k.vc_dim_ = vc_dim;
  k.symmetric_ = symmetric;
  if (k.dim_ < 1) throw InvalidParameter("kernel dimension must be positive");
  if (!k.custom_eval_) throw InvalidParameter("custom kernel needs an evaluator");
  if (!(k.vc_dim_ > 0.0)) throw InvalidParameter("vc_dim must be positive");
  return k;
}

double KernelDensity::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw InvalidParameter("kernel evaluated at a point of wrong dimension");
  if (custom_eval_) return custom_eval_(x);
  double v = 1.0;
  for (double xi : x) {
    v *= profile_.eval(xi);
    if (v == 0.0) return 0.0;
  }
  return v;
}

double KernelDensity::support_radius() const {
  if (custom_eval_) return custom_support_radius_;
  if (axis_support_ == kInf) return kInf;
  return axis_support_ * std::sqrt(static_cast<double>(dim_));
}

double KernelDensity::axis_effective_radius() const {
  if (axis_support_ != kInf) return axis_support_;
  return kGaussianCut;
}

void KernelDensity::set_vc_dim(double v) {
  if (!(v > 0.0)) throw InvalidParameter("vc_dim must be positive");
  vc_dim_ = v;
}

std::optional<double> KernelDensity::lp_norm_hook(double p) const {
  if (!is_product() || !profile_.lp_norm) return std::nullopt;
  return std::pow(profile_.lp_norm(p), dim_);
}

std::optional<double> KernelDensity::moment_hook(double alpha) const {
  if (moment_nd_) return moment_nd_(alpha);
  if (dim_ == 1 && is_product() && profile_.moment) return profile_.moment(alpha);
  return std::nullopt;
}

std::optional<double> KernelDensity::self_convolution_hook(
    std::span<const double> delta) const {
  if (!is_product() || !profile_.self_conv) return std::nullopt;
  if (static_cast<int>(delta.size()) != dim_)
    throw InvalidParameter("self-convolution offset has wrong dimension");
  double v = 1.0;
  for (double di : delta) v *= profile_.self_conv(di);
  return v;
}

DilatedKernel::DilatedKernel(KernelDensity base, double nu)
    : base_(std::move(base)), nu_(nu) {
  if (!(nu_ > 0.0) || !std::isfinite(nu_))
    throw InvalidParameter("dilation parameter nu must be positive and finite");
  scale_ = std::pow(nu_, base_.dim());
}

double DilatedKernel::operator()(std::span<const double> x) const {
  // Hot path: product kernels avoid the temporary scaled point.
  if (base_.is_product() && static_cast<int>(x.size()) == base_.dim()) {
    const auto& prof = base_.profile();
    double v = scale_;
    for (double xi : x) {
      v *= prof.eval(nu_ * xi);
      if (v == 0.0) return 0.0;
    }
    return v;
  }
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = nu_ * x[i];
  return scale_ * base_(y);
}

double DilatedKernel::sup_norm() const { return scale_ * base_.sup_norm(); }

double DilatedKernel::support_radius() const {
  const double r = base_.support_radius();
  return r == kInf ? kInf : r / nu_;
}

double DilatedKernel::axis_effective_radius() const {
  return base_.axis_effective_radius() / nu_;
}

DilatedKernel dilate(const KernelDensity& kernel, double nu) {
  return DilatedKernel(kernel, nu);
}

KernelDensity make_kernel(const std::string& name, int dim) {
  if (dim < 1) throw InvalidParameter("kernel dimension must be positive");
  if (name == "gaussian") {
    KernelDensity k("gaussian", dim, gaussian_profile(), kDefaultVcDim);
    const int d = dim;
    k.set_moment_nd([d](double a) {
      // E||Z||_2^a for Z standard normal in d dimensions (chi moment).
      return std::exp(0.5 * a * std::log(2.0) + std::lgamma(0.5 * (d + a)) -
                      std::lgamma(0.5 * d));
    });
    return k;
  }
  if (name == "uniform") return KernelDensity("uniform", dim, uniform_profile(), kDefaultVcDim);
  if (name == "triangular")
    return KernelDensity("triangular", dim, triangular_profile(), kDefaultVcDim);
  if (name == "epanechnikov")
    return KernelDensity("epanechnikov", dim, epanechnikov_profile(), kDefaultVcDim);
  throw UnsupportedKernel("unknown kernel '" + name +
                          "' (expected gaussian|uniform|triangular|epanechnikov)");
}

double kernel_moment(const KernelDensity& kernel, double alpha,
                     const analysis::QuadratureSpec& quad) {
  if (!(alpha > 0.0))
    throw InvalidParameter("moment order alpha must be positive (alpha = " +
                           std::to_string(alpha) + ")");
  if (auto hook = kernel.moment_hook(alpha)) return *hook;

  if (quad.dim() != kernel.dim())
    throw InvalidParameter("quadrature dimension does not match kernel dimension");
  auto integrand = [&](std::span<const double> x) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return std::pow(std::sqrt(r2), alpha) * kernel(x);
  };
  const double value = analysis::integrate(integrand, quad);

  // Divergence diagnostic: enlarging the box must not keep growing the
  // integral. Compact kernels are unaffected; heavy tails are caught.
  analysis::QuadratureSpec wide = quad;
  for (int i = 0; i < quad.dim(); ++i) {
    wide.lo[i] *= 1.5;
    wide.hi[i] *= 1.5;
  }
  const double value_wide = analysis::integrate(integrand, wide);
  if (!std::isfinite(value) || !std::isfinite(value_wide) ||
      value_wide > value * 1.05 + 1e-12)
    throw NumericalFailure(
        "moment of order " + std::to_string(alpha) + " for kernel '" + kernel.name() +
        "' does not converge on the quadrature box (grew from " + std::to_string(value) +
        " to " + std::to_string(value_wide) + " on a 1.5x larger box)");
  return value;
}

double dilated_lp_norm(const KernelDensity& kernel, double nu, double p,
                       const analysis::QuadratureSpec& quad) {
  if (!(p > 1.0))
    throw InvalidParameter("Lp norm requires p > 1 (p = " + std::to_string(p) + ")");
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw InvalidParameter("dilation parameter nu must be positive and finite");
  quad.validate();
  if (quad.dim() != kernel.dim())
    throw InvalidParameter("quadrature dimension does not match kernel dimension");

  const int d = kernel.dim();
  if (quad.mode == analysis::QuadratureMode::tensor_grid && kernel.is_product()) {
    // |phi_nu|^p factorizes over axes, so the tensor rule is the product of
    // per-axis trapezoid sums on the same nodes.
    const auto& prof = kernel.profile();
    double integral = 1.0;
    for (int i = 0; i < d; ++i) {
      integral *= analysis::integrate_1d(
          [&](double t) { return std::pow(nu * prof.eval(nu * t), p); }, quad.lo[i],
          quad.hi[i], quad.points_per_axis);
    }
    return std::pow(integral, 1.0 / p);
  }

  const DilatedKernel dk(kernel, nu);
  const double integral = analysis::integrate(
      [&](std::span<const double> x) { return std::pow(dk(x), p); }, quad);
  return std::pow(integral, 1.0 / p);
}

double self_convolution(const KernelDensity& kernel, double nu,
                        std::span<const double> delta,
                        const analysis::QuadratureSpec& quad) {
  if (!kernel.symmetric())
    throw UnsupportedKernel("self-convolution requires a symmetric kernel; '" +
                            kernel.name() + "' is not symmetric");
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw InvalidParameter("dilation parameter nu must be positive and finite");
  if (static_cast<int>(delta.size()) != kernel.dim())
    throw InvalidParameter("self-convolution offset has wrong dimension");

  const int d = kernel.dim();
  const double scale = std::pow(nu, d);
  // (phi_nu * phi_nu)(delta) = nu^d (phi * phi)(nu delta)
  std::vector<double> u(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) u[i] = nu * delta[i];

  if (auto hook = kernel.self_convolution_hook(u)) return scale * *hook;

  if (kernel.is_product()) {
    const auto& prof = kernel.profile();
    const double s = kernel.axis_effective_radius();
    double v = 1.0;
    for (double ui : u) {
      const double a = std::max(-s, ui - s);
      const double b = std::min(s, ui + s);
      if (!(a < b)) return 0.0;
      v *= analysis::simpson_1d(
          [&](double z) { return prof.eval(z) * prof.eval(ui - z); }, a, b, 2048);
    }
    return scale * v;
  }

  quad.validate();
  if (quad.dim() != d)
    throw InvalidParameter("quadrature dimension does not match kernel dimension");
  std::vector<double> shifted(u.size());
  const double v = analysis::integrate(
      [&](std::span<const double> z) {
        for (std::size_t i = 0; i < z.size(); ++i) shifted[i] = u[i] - z[i];
        return kernel(z) * kernel(shifted);
      },
      quad);
  return scale * v;
}

}  // namespace mixrate::kernels
