#pragma once

// Target densities to be approximated or estimated. Each target bundles an
// evaluator, an exact sampler, a smoothness declaration (order alpha, the
// translation-smoothness constant K2 when known, and how it was obtained),
// and a finite effective support radius used to size quadrature boxes.

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mixrate/common.hpp"
#include "mixrate/quadrature.hpp"

namespace mixrate::targets {

enum class SmoothnessKind { w1p, wsp, empirical };

struct SmoothnessSpec {
  double alpha = 1.0;        // smoothness order, in (0, 1]
  std::optional<double> k2;  // constant in the translation-smoothness bound
  SmoothnessKind kind = SmoothnessKind::empirical;
};

// Isotropic Gaussian component with a common scalar center on every axis.
struct GaussianComponent {
  double weight = 1.0;
  double center = 0.0;
  double sigma = 1.0;
};

// Analytic per-axis sampling moments (identical across axes for the
// catalogue); used to validate samplers against empirical moments.
struct AxisMoments {
  double mean = 0.0;
  double var = 1.0;
  double fourth_central = 3.0;
};

class TargetDensity {
 public:
  using Evaluator = std::function<double(std::span<const double>)>;
  using Sampler = std::function<void(std::mt19937_64&, std::span<double>)>;
  using Gradient = std::function<void(std::span<const double>, std::span<double>)>;

  TargetDensity(std::string name, int dim, Evaluator eval, Sampler sampler,
                double axis_radius, SmoothnessSpec smoothness);

  double operator()(std::span<const double> x) const;
  void sample(std::mt19937_64& rng, std::span<double> out) const;

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }

  // l2 radius outside which the density is negligible (exact for compact
  // supports, a tail cut otherwise).
  double effective_support_radius() const;
  // Per-axis half-width of the effective support box.
  double axis_effective_radius() const { return axis_radius_; }

  const SmoothnessSpec& smoothness() const { return smoothness_; }
  void set_smoothness(SmoothnessSpec s) { smoothness_ = std::move(s); }

  bool has_gradient() const { return static_cast<bool>(gradient_); }
  void gradient(std::span<const double> x, std::span<double> out) const;
  void set_gradient(Gradient g) { gradient_ = std::move(g); }

  // Closed-form W^{1,p} constant, when one exists for this target.
  std::optional<double> analytic_w1p_constant(double p) const;
  void set_analytic_w1p(std::function<double(double)> fn) { analytic_w1p_ = std::move(fn); }

  // Gaussian mixture structure, when the target is one; enables closed-form
  // convolution with Gaussian kernels.
  const std::vector<GaussianComponent>* gaussian_components() const;
  void set_gaussian_components(std::vector<GaussianComponent> c);

  const std::optional<AxisMoments>& axis_moments() const { return axis_moments_; }
  void set_axis_moments(AxisMoments m) { axis_moments_ = m; }

 private:
  std::string name_;
  int dim_;
  Evaluator eval_;
  Sampler sampler_;
  Gradient gradient_;
  double axis_radius_;
  SmoothnessSpec smoothness_;
  std::function<double(double)> analytic_w1p_;
  std::vector<GaussianComponent> gaussian_components_;
  std::optional<AxisMoments> axis_moments_;
};

// Optional parameters for the catalogue factory.
struct TargetParams {
  double sigma = 1.0;                 // gaussian
  double center = 0.0;                // gaussian
  std::vector<double> weights;        // gaussian_mixture
  std::vector<double> sigmas;         // gaussian_mixture
  std::vector<double> centers;        // gaussian_mixture (optional, default 0)
  double s = 0.4;                     // uniform_box fractional order, in (0, 1/2)
  std::string csv_path;               // csv
};

// gaussian | gaussian_mixture | laplace | uniform_box | csv
TargetDensity make_target(const std::string& name, int dim, const TargetParams& params = {});

// Tabulated 1-d density from CSV columns (x, f0(x)); renormalized to mass 1,
// sampled by piecewise inverse CDF.
TargetDensity load_csv_target(const std::string& path);

// [ int |f0(x - y) - f0(x)|^p dx ]^(1/p). The quadrature box must cover the
// effective support and its shift, else DomainError.
double translation_modulus(const TargetDensity& f0, std::span<const double> y, double p,
                           const analysis::QuadratureSpec& quad);

// [ int ||grad f0||_2^p dx ]^(1/p); UnsupportedTarget when f0 has no gradient.
double sobolev_w1p_constant(const TargetDensity& f0, double p,
                            const analysis::QuadratureSpec& quad);

struct SeminormEstimate {
  double value = 0.0;           // seminorm (double integral to the power 1/p)
  double error_estimate = 0.0;  // |value - value at half resolution|
};

// Gagliardo-type seminorm [ iint |f(x)-f(y)|^p / ||x-y||^(d+sp) dx dy ]^(1/p)
// with near-diagonal cells ||x-y|| < h/2 excluded. Supported for d in {1, 2}.
SeminormEstimate fractional_seminorm(const TargetDensity& f0, double s, double p,
                                     const analysis::QuadratureSpec& quad);

// Log-log fit of translation_modulus over a shift grid; returns an empirical
// SmoothnessSpec with alpha clamped into (0, 1]. Shifts larger than a quarter
// of the effective support radius are discarded; at least 4 usable shifts
// with distinct norms are required.
SmoothnessSpec estimate_smoothness(const TargetDensity& f0, double p,
                                   const std::vector<std::vector<double>>& shift_grid,
                                   const analysis::QuadratureSpec& quad);

// K2 resolution ladder: analytic constant, then gradient quadrature, then
// fractional seminorm at the declared order; nullopt if none applies.
std::optional<double> resolve_k2(const TargetDensity& f0, double p,
                                 const analysis::QuadratureSpec& quad);

}  // namespace mixrate::targets
