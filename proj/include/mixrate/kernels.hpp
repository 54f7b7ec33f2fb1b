#pragma once

// Kernel densities used as mixture components. The built-in catalogue
// (gaussian, uniform, triangular, epanechnikov) consists of tensor products
// of 1-d profiles; each profile carries closed-form hooks for Lp norms,
// absolute moments, and self-convolution where those exist. Operations fall
// back to quadrature when a hook is missing.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "mixrate/common.hpp"
#include "mixrate/quadrature.hpp"

namespace mixrate::kernels {

// vc_dim is a diagnostic constant used in empirical-process bounds. It is
// configuration, not something the library derives; the default absorbs the
// universal constant of the maximal inequality it feeds.
inline constexpr double kDefaultVcDim = 8.0;

struct Profile1d {
  std::function<double(double)> eval;       // 1-d density, integrates to 1
  double sup = 1.0;                         // sup norm of the profile
  double support = kInf;                    // half-width; kInf when unbounded
  std::function<double(double)> lp_norm;    // p -> ||profile||_p, optional
  std::function<double(double)> moment;     // a -> int |t|^a profile(t) dt, optional
  std::function<double(double)> self_conv;  // t -> (profile*profile)(t), optional
};

class KernelDensity {
 public:
  // Tensor product of `dim` copies of a 1-d profile.
  KernelDensity(std::string name, int dim, Profile1d profile, double vc_dim,
                bool symmetric = true);

  // Arbitrary evaluator; support_radius is an l2 truncation radius (kInf ok).
  static KernelDensity custom(std::string name, int dim,
                              std::function<double(std::span<const double>)> eval,
                              double sup_norm, double support_radius, double vc_dim,
                              bool symmetric);

  double operator()(std::span<const double> x) const;

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  double sup_norm() const { return sup_norm_; }
  bool symmetric() const { return symmetric_; }
  bool is_product() const { return static_cast<bool>(profile_.eval); }
  const Profile1d& profile() const { return profile_; }

  // l2 radius outside which the kernel vanishes; kInf when unbounded.
  double support_radius() const;
  // Per-axis half-width used to size quadrature boxes (finite even for
  // unbounded kernels, where tails below ~1e-18 are cut).
  double axis_effective_radius() const;

  double vc_dim() const { return vc_dim_; }
  void set_vc_dim(double v);

  // Closed-form hooks; nullopt means "use quadrature".
  std::optional<double> lp_norm_hook(double p) const;
  std::optional<double> moment_hook(double alpha) const;
  // Self-convolution of the undilated kernel at offset delta.
  std::optional<double> self_convolution_hook(std::span<const double> delta) const;

  // Set by the factory for kernels with a closed-form d-dim moment.
  void set_moment_nd(std::function<double(double)> m) { moment_nd_ = std::move(m); }

 private:
  KernelDensity() = default;

  std::string name_;
  int dim_ = 1;
  Profile1d profile_;
  std::function<double(std::span<const double>)> custom_eval_;
  double sup_norm_ = 1.0;
  double axis_support_ = kInf;
  double custom_support_radius_ = kInf;
  double vc_dim_ = kDefaultVcDim;
  bool symmetric_ = true;
  std::function<double(double)> moment_nd_;
};

// phi_nu(x) = nu^d phi(nu x); a probability density for every nu > 0.
class DilatedKernel {
 public:
  DilatedKernel(KernelDensity base, double nu);

  double operator()(std::span<const double> x) const;
  const KernelDensity& base() const { return base_; }
  double nu() const { return nu_; }
  int dim() const { return base_.dim(); }
  double sup_norm() const;
  double support_radius() const;
  double axis_effective_radius() const;

 private:
  KernelDensity base_;
  double nu_;
  double scale_;  // nu^d
};

DilatedKernel dilate(const KernelDensity& kernel, double nu);

// Catalogue factory: gaussian | uniform | triangular | epanechnikov.
KernelDensity make_kernel(const std::string& name, int dim);

// int ||x||_2^alpha phi(x) dx. Closed form when available, else quadrature
// with a divergence diagnostic. alpha must be positive.
double kernel_moment(const KernelDensity& kernel, double alpha,
                     const analysis::QuadratureSpec& quad);

// ||phi_nu||_p computed numerically (p > 1). Satisfies the dilation identity
// ||phi_nu||_p = nu^(d/q) ||phi||_p with 1/p + 1/q = 1.
double dilated_lp_norm(const KernelDensity& kernel, double nu, double p,
                       const analysis::QuadratureSpec& quad);

// (phi_nu * phi_nu)(delta); requires a symmetric kernel.
double self_convolution(const KernelDensity& kernel, double nu,
                        std::span<const double> delta,
                        const analysis::QuadratureSpec& quad);

}  // namespace mixrate::kernels
