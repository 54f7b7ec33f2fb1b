#pragma once

// Distances, convolution, and the smoothing-error diagnostic linking kernels
// and targets, plus empirical measures drawn from targets.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mixrate/common.hpp"
#include "mixrate/kernels.hpp"
#include "mixrate/quadrature.hpp"
#include "mixrate/targets.hpp"

namespace mixrate::analysis {

// A finite sample with its draw provenance. Points are stored row-major.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(int dim, std::vector<double> flat, std::uint64_t seed);

  static EmpiricalMeasure draw(const targets::TargetDensity& f0, std::size_t n,
                               std::uint64_t seed);

  int dim() const { return dim_; }
  std::size_t size() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const double> point(std::size_t i) const;
  const std::vector<double>& flat() const { return flat_; }

 private:
  int dim_;
  std::size_t n_;
  std::vector<double> flat_;
  std::uint64_t seed_;
};

// Sample average of f over the measure, pairwise-summed.
double empirical_mean(const EmpiricalMeasure& mu, const PointFn& f);

// [ int |f|^p ]^(1/p) over the quadrature box.
double lp_norm(const PointFn& f, double p, const QuadratureSpec& quad);

// [ int |f - g|^p ]^(1/p); NaNs raise NumericalFailure naming the point.
double lp_distance(const PointFn& f, const PointFn& g, double p, const QuadratureSpec& quad);

// Evaluator of (phi_nu * f0). Uses the exact Gaussian-Gaussian form when the
// kernel is gaussian and the target is a Gaussian mixture; otherwise an inner
// quadrature over the (dilated) kernel support with `inner_points` nodes per
// axis.
PointFn convolution(const kernels::DilatedKernel& kernel, const targets::TargetDensity& f0,
                    int inner_points = 513);

// (phi_nu * f0)(x) at a single point.
double convolve(const kernels::DilatedKernel& kernel, const targets::TargetDensity& f0,
                std::span<const double> x, int inner_points = 513);

struct SmoothingError {
  double measured = 0.0;  // || phi_nu * f0 - f0 ||_p by quadrature
  double bound = 0.0;     // K1 K2 nu^(-alpha)
  double k1 = 0.0;
  double k2 = 0.0;
  double nu = 0.0;
  double alpha = 0.0;
  bool within_bound(double rel_slack = 1e-3) const {
    return measured <= bound * (1.0 + rel_slack) + 1e-12;
  }
};

// Smoothing error of the dilated kernel against the target. K2 comes from the
// target's smoothness declaration or the analytic/quadrature ladder; if it
// cannot be resolved the call fails, directing the caller to
// estimate_smoothness.
SmoothingError smoothing_error(const targets::TargetDensity& f0,
                               const kernels::KernelDensity& kernel, double nu, double p,
                               const QuadratureSpec& quad);

// Default experiment box: covers target and dilated kernel supports with a
// 6/nu margin; per-axis resolution 4096 (d=1), 256 (d=2), Monte Carlo beyond.
QuadratureSpec default_quadrature(const kernels::KernelDensity& kernel,
                                  const targets::TargetDensity& f0, double min_nu,
                                  std::uint64_t seed = 1);

}  // namespace mixrate::analysis
